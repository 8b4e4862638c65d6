#include "wcreg/loss.hpp"

#include <cmath>
#include <string>

#include "wcreg/error.hpp"
#include "wcreg/math.hpp"

namespace wcreg {

void TrainConfig::validate() const {
  if (!(gamma > 0.0)) throw ConfigError("TrainConfig", "gamma must be positive");
  if (!(nu >= 0.0)) throw ConfigError("TrainConfig", "nu must be nonnegative");
  if (!(l2_reg >= 0.0)) throw ConfigError("TrainConfig", "l2_reg must be nonnegative");
  if (sign_eta && !(*sign_eta > 0.0)) throw ConfigError("TrainConfig", "sign_eta must be positive");
}

void Dataset::append(const Eigen::VectorXd& x, double y, bool is_acquired) {
  if (xs.size() == 0) xs.resize(x.size(), 0);
  if (x.size() != xs.rows()) throw DimensionError("Dataset", "sample dimension mismatch");
  xs.conservativeResize(Eigen::NoChange, xs.cols() + 1);
  xs.col(xs.cols() - 1) = x;
  ys.conservativeResize(ys.size() + 1);
  ys[ys.size() - 1] = y;
  acquired.push_back(is_acquired);
}

void Dataset::validate() const {
  if (ys.size() < 1) throw Error("Dataset", "empty dataset");
  if (xs.cols() != ys.size() || static_cast<Eigen::Index>(acquired.size()) != ys.size())
    throw DimensionError("Dataset", "column count mismatch");
}

namespace {

// Rethrows a model failure with the index of the first offending sample.
[[noreturn]] void locate_failure(const Model& model, const Eigen::VectorXd& theta, const Eigen::MatrixXd& xs,
                                 const std::string& what) {
  for (Eigen::Index k = 0; k < xs.cols(); ++k) {
    try {
      if (!std::isfinite(model.eval(theta, xs.col(k)))) throw NumericError("", "");
    } catch (const NumericError& e) {
      throw NumericError("sample " + std::to_string(k), "non-finite model output (" + std::string(e.what()) + ")");
    }
  }
  throw NumericError("loss", what);
}

double mu_value(EnvelopeMu mu, double v) { return mu == EnvelopeMu::kSquare ? v * v : v; }
double mu_slope(EnvelopeMu mu, double v) { return mu == EnvelopeMu::kSquare ? 2.0 * v : 1.0; }

}  // namespace

Eigen::VectorXd loss_predictions(const Model& model, const Eigen::VectorXd& theta, const Eigen::MatrixXd& xs,
                                 const TrainConfig& cfg) {
  Eigen::VectorXd p = model.eval_batch(theta, xs);
  if (cfg.sign_eta) {
    const double eta = *cfg.sign_eta;
    p = p.unaryExpr([eta](double v) { return std::tanh(eta * v); });
  }
  return p;
}

LossValue mse_loss(const Model& model, const Eigen::VectorXd& theta, const Dataset& data, double l2_reg) {
  data.validate();
  if (!(l2_reg >= 0.0)) throw ConfigError("mse_loss", "l2_reg must be nonnegative");
  const double invN = 1.0 / static_cast<double>(data.size());
  LossValue out;
  out.grad = 2.0 * l2_reg * theta;
  Eigen::VectorXd pred;
  try {
    pred = model.eval_batch(theta, data.xs);
  } catch (const NumericError& e) {
    locate_failure(model, theta, data.xs, e.what());
  }
  const Eigen::VectorXd r = data.ys - pred;
  out.value = l2_reg * theta.squaredNorm() + r.squaredNorm() * invN;
  model.backward_batch(theta, data.xs, -2.0 * invN * r, out.grad);
  return out;
}

LossValue smooth_linf_loss(const Model& model, const Eigen::VectorXd& theta, const Dataset& data,
                           const TrainConfig& cfg) {
  data.validate();
  cfg.validate();
  const Eigen::Index N = data.size();
  const double gamma = cfg.gamma;

  LossValue out;
  out.grad = Eigen::VectorXd::Zero(theta.size());

  // Forward pass to get raw outputs; the backward pass is seeded afterwards.
  Eigen::VectorXd raw;
  try {
    raw = model.eval_batch(theta, data.xs);
  } catch (const NumericError& e) {
    locate_failure(model, theta, data.xs, e.what());
  }
  Eigen::VectorXd pred = raw, dpred = Eigen::VectorXd::Ones(N);
  if (cfg.sign_eta) {
    const double eta = *cfg.sign_eta;
    for (Eigen::Index k = 0; k < N; ++k) {
      const double t = std::tanh(eta * raw[k]);
      pred[k] = t;
      dpred[k] = eta * (1.0 - t * t);
    }
  }
  const Eigen::ArrayXd e = (data.ys - pred).array();

  // Shifted by max|e| before scaling so that max|e| <= value <= max|e| + log(2N)/gamma
  // also holds in floating point.
  const double m = e.abs().maxCoeff();
  Eigen::ArrayXd terms(2 * N);
  terms << gamma * (e - m), gamma * (-e - m);
  Eigen::ArrayXd w;
  const double lse = log_sum_exp(terms, w);
  out.value = m + std::max(0.0, lse) / gamma;
  // d value / d pred_k: the +e term contributes -w_k, the -e term +w_{N+k}.
  Eigen::VectorXd d_pred = (w.tail(N) - w.head(N)).matrix();

  if (cfg.nu > 0.0) {
    out.value += cfg.nu / static_cast<double>(N) * e.square().sum();
    d_pred += (-2.0 * cfg.nu / static_cast<double>(N) * e).matrix();
  }
  if (cfg.l2_reg > 0.0) {
    out.value += cfg.l2_reg * theta.squaredNorm();
    out.grad += 2.0 * cfg.l2_reg * theta;
  }

  const Eigen::VectorXd seeds = d_pred.cwiseProduct(dpred);
  model.backward_batch(theta, data.xs, seeds, out.grad);
  return out;
}

LossValue envelope_loss_sym(const Model& env, const Eigen::VectorXd& psi, const Eigen::MatrixXd& xs,
                            const Eigen::VectorXd& errors, double gamma, EnvelopeMu mu, double rho_psi) {
  const Eigen::Index N = xs.cols();
  if (N < 1) throw Error("envelope_loss", "empty dataset");
  if (errors.size() != N) throw DimensionError("envelope_loss", "errors not aligned with samples");
  if (!(gamma > 0.0)) throw ConfigError("envelope_loss", "gamma must be positive");

  const Eigen::VectorXd eps = env.eval_batch(psi, xs);
  Eigen::ArrayXd terms(N + 1);
  terms[0] = 0.0;
  terms.tail(N) = gamma * (errors.array().abs() - eps.array());
  Eigen::ArrayXd w;
  const double lse = log_sum_exp(terms, w);

  LossValue out;
  out.value = rho_psi * psi.squaredNorm() + lse / gamma;
  Eigen::VectorXd seeds(N);
  for (Eigen::Index k = 0; k < N; ++k) {
    out.value += mu_value(mu, eps[k]) / static_cast<double>(N);
    seeds[k] = mu_slope(mu, eps[k]) / static_cast<double>(N) - w[k + 1];
  }
  out.grad = 2.0 * rho_psi * psi;
  env.backward_batch(psi, xs, seeds, out.grad);
  return out;
}

AsymLossValue envelope_loss_asym(const Model& env_u, const Eigen::VectorXd& psi_u, const Model& env_l,
                                 const Eigen::VectorXd& psi_l, const Eigen::MatrixXd& xs,
                                 const Eigen::VectorXd& errors, double gamma, EnvelopeMu mu, double rho_psi,
                                 bool additive_mu) {
  const Eigen::Index N = xs.cols();
  if (N < 1) throw Error("envelope_loss", "empty dataset");
  if (errors.size() != N) throw DimensionError("envelope_loss", "errors not aligned with samples");
  if (!(gamma > 0.0)) throw ConfigError("envelope_loss", "gamma must be positive");

  const Eigen::VectorXd eu = env_u.eval_batch(psi_u, xs);
  const Eigen::VectorXd el = env_l.eval_batch(psi_l, xs);
  Eigen::ArrayXd terms(2 * N + 1);
  terms[0] = 0.0;
  terms.segment(1, N) = gamma * (errors.array() - eu.array());
  terms.tail(N) = gamma * (-errors.array() - el.array());
  Eigen::ArrayXd w;
  const double lse = log_sum_exp(terms, w);

  AsymLossValue out;
  out.value = rho_psi * (psi_u.squaredNorm() + psi_l.squaredNorm()) + lse / gamma;
  Eigen::VectorXd su(N), sl(N);
  const double invN = 1.0 / static_cast<double>(N);
  for (Eigen::Index k = 0; k < N; ++k) {
    if (additive_mu) {
      out.value += (mu_value(mu, eu[k]) + mu_value(mu, el[k])) * invN;
      su[k] = mu_slope(mu, eu[k]) * invN;
      sl[k] = mu_slope(mu, el[k]) * invN;
    } else {
      const double s = eu[k] + el[k];
      out.value += mu_value(mu, s) * invN;
      su[k] = sl[k] = mu_slope(mu, s) * invN;
    }
    su[k] -= w[1 + k];
    sl[k] -= w[1 + N + k];
  }
  out.grad_upper = 2.0 * rho_psi * psi_u;
  out.grad_lower = 2.0 * rho_psi * psi_l;
  env_u.backward_batch(psi_u, xs, su, out.grad_upper);
  env_l.backward_batch(psi_l, xs, sl, out.grad_lower);
  return out;
}

}  // namespace wcreg
