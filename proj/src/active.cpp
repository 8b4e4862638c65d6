#include "wcreg/active.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "wcreg/error.hpp"

namespace wcreg {

void ActiveConfig::validate() const {
  if (n_initial < 1) throw ConfigError("ActiveConfig", "n_initial must be at least 1");
  if (max_steps < 0) throw ConfigError("ActiveConfig", "max_steps must be nonnegative");
  if (!(err_threshold >= 0.0)) throw ConfigError("ActiveConfig", "err_threshold must be nonnegative");
  train.validate();
  lbfgs.validate();
  global.validate();
  recert.validate();
}

std::string stop_reason_name(StopReason r) { return r == StopReason::kThreshold ? "threshold" : "budget"; }

std::vector<std::pair<Eigen::VectorXd, double>> FitReport::acquired_points() const {
  std::vector<std::pair<Eigen::VectorXd, double>> out;
  for (Eigen::Index k = 0; k < dataset_final.size(); ++k)
    if (dataset_final.acquired[k]) out.emplace_back(dataset_final.xs.col(k), dataset_final.ys[k]);
  return out;
}

double FitReport::certified_wce() const {
  return std::isnan(recertified_wce) ? wce : std::max(wce, recertified_wce);
}

double abs_error(const ScalarField& f, const Model& model, const Eigen::VectorXd& theta, const TrainConfig& train,
                 const Eigen::VectorXd& x) {
  double p = model.eval(theta, x);
  if (train.sign_eta) p = std::tanh(*train.sign_eta * p);
  return std::abs(f(x) - p);
}

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e019ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

GlobalResult certify(const ScalarField& f, const Model& model, const Eigen::VectorXd& theta, const TrainConfig& train,
                     const Box& box, const DirectConfig& dc) {
  return maximize([&](const Eigen::VectorXd& x) { return abs_error(f, model, theta, train, x); }, box, dc);
}

Dataset make_initial(const ScalarField& f, const Box& box, const ActiveConfig& cfg) {
  const Eigen::MatrixXd X = initial_design(cfg.sampler, box, cfg.n_initial, mix(cfg.seed, 1));
  Dataset d;
  d.xs = X;
  d.ys.resize(X.cols());
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    d.ys[k] = f(X.col(k));
    if (!std::isfinite(d.ys[k])) throw NumericError("target", "non-finite target at initial sample " + std::to_string(k));
  }
  d.acquired.assign(X.cols(), false);
  return d;
}

}  // namespace

LbfgsResult train_minimax(const Model& model, const Dataset& data, const TrainConfig& train, const LbfgsConfig& lbfgs,
                          const Eigen::VectorXd& warm) {
  const Objective obj = [&](const Eigen::VectorXd& th, Eigen::VectorXd& g) {
    LossValue lv = smooth_linf_loss(model, th, data, train);
    g = std::move(lv.grad);
    return lv.value;
  };
  const InitSampler init = [&](int index, std::mt19937_64& rng) -> Eigen::VectorXd {
    if (index == 0 && warm.size() == model.num_params()) return warm;
    return model.initial_params(rng);
  };
  return multistart_minimize(obj, init, lbfgs);
}

FitReport fit_worst_case(const ScalarField& f, const Model& model, const Box& box, const ActiveConfig& cfg) {
  cfg.validate();
  return fit_worst_case(f, model, box, cfg, make_initial(f, box, cfg));
}

FitReport fit_worst_case(const ScalarField& f, const Model& model, const Box& box, const ActiveConfig& cfg,
                         Dataset data) {
  cfg.validate();
  data.validate();
  if (data.xs.rows() != model.n_inputs() || box.dim() != model.n_inputs())
    throw DimensionError("fit_worst_case", "box, data and model dimensions differ");

  const Eigen::Index N0 = data.size();
  // The loop body runs at least once, so a zero step budget still trains and certifies.
  const Eigen::Index n_final = N0 + std::max(cfg.max_steps, 1);

  FitReport rep;
  std::vector<Eigen::VectorXd> thetas;
  Eigen::VectorXd theta;
  {
    std::mt19937_64 rng(mix(cfg.seed, 2));
    theta = model.initial_params(rng);
  }

  Eigen::Index N = N0;
  int iteration = 0;
  while (true) {
    const auto t0 = Clock::now();
    IterationRecord rec;
    rec.iteration = iteration;
    rec.n_samples = N;

    LbfgsConfig lc = cfg.lbfgs;
    lc.seed = mix(cfg.seed, 1000 + static_cast<std::uint64_t>(iteration));
    try {
      const LbfgsResult r = train_minimax(model, data, cfg.train, lc, theta);
      if (!std::isfinite(r.value)) throw NumericError("training", "non-finite loss");
      theta = r.x;
      rec.train_loss = r.value;
    } catch (const Error&) {
      rec.failed = true;
      rec.train_loss = std::numeric_limits<double>::quiet_NaN();
      ++rep.failed_iterations;
    }
    thetas.push_back(theta);

    const GlobalResult g = certify(f, model, theta, cfg.train, box, cfg.global);
    const Eigen::VectorXd x_next = g.x_star;
    const double y_next = f(x_next);
    if (!std::isfinite(y_next)) throw NumericError("target", "non-finite target at acquired point");
    double pred = model.eval(theta, x_next);
    if (cfg.train.sign_eta) pred = std::tanh(*cfg.train.sign_eta * pred);
    rec.error = std::abs(y_next - pred);
    rec.direct_evals = g.evals_used;

    data.append(x_next, y_next, true);
    rep.error_history.push_back(rec.error);
    ++N;
    ++iteration;
    rec.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    rep.iterations.push_back(rec);

    if (rec.error <= cfg.err_threshold) {
      rep.stop_reason = StopReason::kThreshold;
      break;
    }
    if (N >= n_final) {
      rep.stop_reason = StopReason::kBudget;
      break;
    }
  }
  if (rep.failed_iterations == iteration) throw Error("fit_worst_case", "training failed at every iteration");

  std::size_t best = 0;
  for (std::size_t i = 1; i < rep.error_history.size(); ++i)
    if (rep.error_history[i] < rep.error_history[best]) best = i;
  rep.best_iter = N0 + static_cast<Eigen::Index>(best);
  rep.wce = rep.error_history[best];
  rep.theta_star = ParamVec{thetas[best], model.layout()};
  rep.dataset_final = std::move(data);

  rep.recertified_wce = std::numeric_limits<double>::quiet_NaN();
  if (cfg.recertify) {
    const GlobalResult g = certify(f, model, thetas[best], cfg.train, box, cfg.recert);
    rep.recertified_wce = g.value_star;
    rep.recert_evals = g.evals_used;
  }
  return rep;
}

FitReport fit_passive_mse(const ScalarField& f, const Model& model, const Box& box, Eigen::Index n_samples,
                          const ActiveConfig& cfg) {
  ActiveConfig c = cfg;
  c.n_initial = n_samples;
  c.validate();
  const Dataset data = make_initial(f, box, c);
  const Objective obj = [&](const Eigen::VectorXd& th, Eigen::VectorXd& g) {
    LossValue lv = mse_loss(model, th, data, cfg.train.l2_reg);
    g = std::move(lv.grad);
    return lv.value;
  };
  LbfgsConfig lc = cfg.lbfgs;
  lc.seed = mix(cfg.seed, 1000);
  const LbfgsResult r =
      multistart_minimize(obj, [&](int, std::mt19937_64& rng) { return model.initial_params(rng); }, lc);

  FitReport rep;
  const auto t0 = Clock::now();
  const GlobalResult g = certify(f, model, r.x, cfg.train, box, cfg.global);
  IterationRecord rec;
  rec.n_samples = data.size();
  rec.error = g.value_star;
  rec.train_loss = r.value;
  rec.direct_evals = g.evals_used;
  rec.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  rep.iterations.push_back(rec);
  rep.error_history.push_back(g.value_star);
  rep.wce = g.value_star;
  rep.recertified_wce = std::numeric_limits<double>::quiet_NaN();
  if (cfg.recertify) {
    const GlobalResult rc = certify(f, model, r.x, cfg.train, box, cfg.recert);
    rep.recertified_wce = rc.value_star;
    rep.recert_evals = rc.evals_used;
  }
  rep.best_iter = data.size();
  rep.theta_star = ParamVec{r.x, model.layout()};
  rep.dataset_final = data;
  return rep;
}

}  // namespace wcreg
