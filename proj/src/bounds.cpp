#include "wcreg/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "wcreg/error.hpp"
#include "wcreg/math.hpp"

namespace wcreg {

std::string bound_form_name(BoundForm f) {
  switch (f) {
    case BoundForm::kConstSym: return "const-sym";
    case BoundForm::kConstAsym: return "const-asym";
    case BoundForm::kInputSym: return "input-sym";
    case BoundForm::kInputAsym: return "input-asym";
  }
  return "const-sym";
}

BoundForm parse_bound_form(const std::string& s) {
  for (BoundForm f : {BoundForm::kConstSym, BoundForm::kConstAsym, BoundForm::kInputSym, BoundForm::kInputAsym})
    if (bound_form_name(f) == s) return f;
  throw ConfigError("bounds", "unknown bound form '" + s + "'");
}

void BoundsConfig::validate() const {
  global.validate();
  lbfgs.validate();
  if (!(gamma > 0.0)) throw ConfigError("BoundsConfig", "gamma must be positive");
  if (!(rho_psi >= 0.0)) throw ConfigError("BoundsConfig", "rho_psi must be nonnegative");
}

ConstBounds constant_asym_bounds(const ScalarField& f, const Model& model, const Eigen::VectorXd& theta,
                                 const Box& box, const DirectConfig& dc) {
  const GlobalResult lo =
      maximize([&](const Eigen::VectorXd& x) { return maxzero(model.eval(theta, x) - f(x)); }, box, dc);
  const GlobalResult hi =
      maximize([&](const Eigen::VectorXd& x) { return maxzero(f(x) - model.eval(theta, x)); }, box, dc);
  return {std::max(lo.value_star, 0.0), std::max(hi.value_star, 0.0), lo.evals_used + hi.evals_used};
}

Eigen::VectorXd residuals(const Model& model, const Eigen::VectorXd& theta, const Dataset& data) {
  return data.ys - model.eval_batch(theta, data.xs);
}

namespace {

void check_envelope(const Model& env) {
  if (env.spec().family != Family::kEnvelope) throw ConfigError("bounds", "envelope model must be envelope-nn");
}

}  // namespace

LbfgsResult fit_envelope_sym(const Model& env, const Eigen::MatrixXd& xs, const Eigen::VectorXd& errors,
                             const BoundsConfig& cfg) {
  cfg.validate();
  check_envelope(env);
  const Objective obj = [&](const Eigen::VectorXd& psi, Eigen::VectorXd& g) {
    LossValue lv = envelope_loss_sym(env, psi, xs, errors, cfg.gamma, cfg.mu, cfg.rho_psi);
    g = std::move(lv.grad);
    return lv.value;
  };
  return multistart_minimize(obj, [&](int, std::mt19937_64& rng) { return env.initial_params(rng); }, cfg.lbfgs);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> fit_envelope_asym(const Model& env_u, const Model& env_l,
                                                              const Eigen::MatrixXd& xs, const Eigen::VectorXd& errors,
                                                              const BoundsConfig& cfg, double* loss) {
  cfg.validate();
  check_envelope(env_u);
  check_envelope(env_l);
  const Eigen::Index nu = env_u.num_params(), nl = env_l.num_params();
  const Objective obj = [&](const Eigen::VectorXd& psi, Eigen::VectorXd& g) {
    const AsymLossValue lv =
        envelope_loss_asym(env_u, psi.head(nu), env_l, psi.tail(nl), xs, errors, cfg.gamma, cfg.mu, cfg.rho_psi);
    g.head(nu) = lv.grad_upper;
    g.tail(nl) = lv.grad_lower;
    return lv.value;
  };
  const InitSampler init = [&](int, std::mt19937_64& rng) {
    Eigen::VectorXd psi(nu + nl);
    psi.head(nu) = env_u.initial_params(rng);
    psi.tail(nl) = env_l.initial_params(rng);
    return psi;
  };
  const LbfgsResult r = multistart_minimize(obj, init, cfg.lbfgs);
  if (loss) *loss = r.value;
  return {r.x.head(nu), r.x.tail(nl)};
}

GlobalResult calibrate_kappa_sym(const ScalarField& f, const Model& model, const Eigen::VectorXd& theta,
                                 const Model& env, const Eigen::VectorXd& psi, const Box& box, const DirectConfig& dc) {
  return maximize(
      [&](const Eigen::VectorXd& x) { return std::abs(f(x) - model.eval(theta, x)) / env.eval(psi, x); }, box, dc);
}

std::pair<GlobalResult, GlobalResult> calibrate_kappa_asym(const ScalarField& f, const Model& model,
                                                           const Eigen::VectorXd& theta, const Model& env_u,
                                                           const Eigen::VectorXd& psi_u, const Model& env_l,
                                                           const Eigen::VectorXd& psi_l, const Box& box,
                                                           const DirectConfig& dc) {
  GlobalResult up = maximize(
      [&](const Eigen::VectorXd& x) { return maxzero(f(x) - model.eval(theta, x)) / env_u.eval(psi_u, x); }, box, dc);
  GlobalResult lo = maximize(
      [&](const Eigen::VectorXd& x) { return maxzero(model.eval(theta, x) - f(x)) / env_l.eval(psi_l, x); }, box, dc);
  return {std::move(up), std::move(lo)};
}

BoundsReport certify_bounds(const ScalarField& f, const Model& model, const Eigen::VectorXd& theta, double wce,
                            const Dataset& data, const Box& box, BoundForm form, const ModelSpec& envelope,
                            const BoundsConfig& cfg) {
  cfg.validate();
  if (!(wce >= 0.0)) throw ConfigError("bounds", "wce must be nonnegative");
  BoundsReport rep;
  rep.form = form;
  rep.box = box;
  rep.wce = wce;
  rep.const_lower = rep.const_upper = wce;

  if (form == BoundForm::kConstAsym || form == BoundForm::kInputAsym) {
    const ConstBounds cb = constant_asym_bounds(f, model, theta, box, cfg.global);
    // A one-sided maximum above wce means wce was underestimated; keep the larger certificate.
    rep.wce = std::max({wce, cb.e_min, cb.e_max});
    rep.const_lower = cb.e_min;
    rep.const_upper = cb.e_max;
    rep.certification_evals += cb.evals_used;
  }
  if (form == BoundForm::kConstSym || form == BoundForm::kConstAsym) return rep;

  const Eigen::VectorXd e = residuals(model, theta, data);
  auto env_u = std::make_shared<const Model>(envelope);
  check_envelope(*env_u);
  if (form == BoundForm::kInputSym) {
    const LbfgsResult r = fit_envelope_sym(*env_u, data.xs, e, cfg);
    const GlobalResult k = calibrate_kappa_sym(f, model, theta, *env_u, r.x, box, cfg.global);
    rep.env_u = env_u;
    rep.psi_u = ParamVec{r.x, env_u->layout()};
    rep.kappa_u = rep.kappa_l = k.value_star;
    rep.certification_evals += k.evals_used;
    return rep;
  }
  auto env_l = std::make_shared<const Model>(envelope);
  const auto [pu, pl] = fit_envelope_asym(*env_u, *env_l, data.xs, e, cfg);
  const auto [ku, kl] = calibrate_kappa_asym(f, model, theta, *env_u, pu, *env_l, pl, box, cfg.global);
  rep.env_u = env_u;
  rep.env_l = env_l;
  rep.psi_u = ParamVec{pu, env_u->layout()};
  rep.psi_l = ParamVec{pl, env_l->layout()};
  rep.kappa_u = ku.value_star;
  rep.kappa_l = kl.value_star;
  rep.certification_evals += ku.evals_used + kl.evals_used;
  return rep;
}

std::pair<double, double> bound_at(const BoundsReport& r, const Eigen::VectorXd& x) {
  if (x.size() != r.box.dim()) throw DimensionError("bound_at", "point dimension differs from the box");
  if (!r.box.contains(x, 1e-12)) throw Error("bound_at", "point outside the certified box");
  switch (r.form) {
    case BoundForm::kConstSym: return {r.wce, r.wce};
    case BoundForm::kConstAsym: return {r.const_lower, r.const_upper};
    case BoundForm::kInputSym: {
      const double b = std::min(r.wce, r.kappa_u * r.env_u->eval(r.psi_u.values, x));
      return {b, b};
    }
    case BoundForm::kInputAsym:
      return {std::min(r.wce, r.kappa_l * r.env_l->eval(r.psi_l.values, x)),
              std::min(r.wce, r.kappa_u * r.env_u->eval(r.psi_u.values, x))};
  }
  return {r.wce, r.wce};
}

CenteredPrediction symmetrize(const Model& model, const Eigen::VectorXd& theta, const BoundsReport& report,
                              const Eigen::VectorXd& x) {
  if (report.form != BoundForm::kInputAsym) throw ConfigError("symmetrize", "requires input-asym bounds");
  const auto [lo, hi] = bound_at(report, x);
  return {model.eval(theta, x) + 0.5 * (hi - lo), 0.5 * (hi + lo)};
}

}  // namespace wcreg
