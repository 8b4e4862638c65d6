#include "wcreg/dynamics.hpp"

#include <cmath>

#include "wcreg/bounds.hpp"
#include "wcreg/error.hpp"
#include "wcreg/parallel.hpp"

namespace wcreg {

std::string integrator_name(Integrator m) { return m == Integrator::kRk4 ? "rk4" : "heun"; }

Integrator parse_integrator(const std::string& s) {
  if (s == "heun") return Integrator::kHeun;
  if (s == "rk4") return Integrator::kRk4;
  throw ConfigError("integrator", "unknown method '" + s + "'");
}

namespace {

Eigen::VectorXd derivative(const OdeModel& model, const Eigen::VectorXd& xi, const Eigen::VectorXd& u, int stage) {
  Eigen::VectorXd d = model.F(xi, u);
  if (d.size() != model.n_state) throw DimensionError("stage " + std::to_string(stage), "vector field size mismatch");
  if (!d.allFinite()) throw NumericError("stage " + std::to_string(stage), "non-finite derivative");
  return d;
}

}  // namespace

Eigen::VectorXd integrate_step(const OdeModel& model, const Eigen::VectorXd& xi, const Eigen::VectorXd& u, double Ts,
                               Integrator method, int substeps) {
  if (substeps < 1) throw ConfigError("integrate_step", "substeps must be at least 1");
  if (xi.size() != model.n_state || u.size() != model.n_input)
    throw DimensionError("integrate_step", "state or input size mismatch");
  const double h = Ts / substeps;
  Eigen::VectorXd x = xi;
  for (int s = 0; s < substeps; ++s) {
    if (method == Integrator::kHeun) {
      const Eigen::VectorXd k1 = derivative(model, x, u, 1);
      const Eigen::VectorXd k2 = derivative(model, x + h * k1, u, 2);
      x += 0.5 * h * (k1 + k2);
    } else {
      const Eigen::VectorXd k1 = derivative(model, x, u, 1);
      const Eigen::VectorXd k2 = derivative(model, x + 0.5 * h * k1, u, 2);
      const Eigen::VectorXd k3 = derivative(model, x + 0.5 * h * k2, u, 3);
      const Eigen::VectorXd k4 = derivative(model, x + h * k3, u, 4);
      x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return x;
}

namespace {

Eigen::VectorXd join(const Eigen::VectorXd& xi, const Eigen::VectorXd& u) {
  Eigen::VectorXd x(xi.size() + u.size());
  x << xi, u;
  return x;
}

Eigen::VectorXd predict_all(const std::vector<LearnedComponent>& comps, const Eigen::VectorXd& x) {
  Eigen::VectorXd y(comps.size());
  for (std::size_t j = 0; j < comps.size(); ++j) y[j] = comps[j].model->eval(comps[j].theta.values, x);
  return y;
}

Eigen::MatrixXd intervals(const std::vector<LearnedComponent>& comps) {
  Eigen::MatrixXd I(comps.size(), 2);
  for (std::size_t j = 0; j < comps.size(); ++j) I.row(j) << -comps[j].lower, comps[j].upper;
  return I;
}

}  // namespace

Eigen::VectorXd UncertainModel::predict(const Eigen::VectorXd& xi, const Eigen::VectorXd& u) const {
  return predict_all(states, join(xi, u));
}

Eigen::VectorXd UncertainModel::predict_output(const Eigen::VectorXd& xi, const Eigen::VectorXd& u) const {
  return predict_all(outputs, join(xi, u));
}

Eigen::MatrixXd UncertainModel::W() const { return intervals(states); }
Eigen::MatrixXd UncertainModel::V() const { return intervals(outputs); }

UncertainModel learn_uncertain_model(const OdeModel& ode, const Box& box, double Ts,
                                     const std::vector<ModelSpec>& state_families,
                                     const std::vector<ModelSpec>& output_families, const SysIdConfig& cfg) {
  if (box.dim() != ode.n_state + ode.n_input) throw DimensionError("learn_uncertain_model", "box must cover (xi, u)");
  if (static_cast<Eigen::Index>(state_families.size()) != ode.n_state)
    throw DimensionError("learn_uncertain_model", "one family per state component required");
  if (!output_families.empty() && (static_cast<Eigen::Index>(output_families.size()) != ode.n_output || !ode.G))
    throw DimensionError("learn_uncertain_model", "one family per output component required");
  if (!(Ts > 0.0)) throw ConfigError("learn_uncertain_model", "Ts must be positive");

  const Eigen::Index ns = ode.n_state, ni = ode.n_input;
  const std::size_t n_jobs = state_families.size() + output_families.size();
  std::vector<LearnedComponent> comps(n_jobs);

  parallel_for(n_jobs, [&](std::size_t j) {
    const bool is_state = j < state_families.size();
    const std::size_t c = is_state ? j : j - state_families.size();
    const ScalarField target = [&, is_state, c](const Eigen::VectorXd& x) {
      const Eigen::VectorXd xi = x.head(ns), u = x.tail(ni);
      if (is_state) return integrate_step(ode, xi, u, Ts, cfg.integrator.method, cfg.integrator.substeps)[c];
      return ode.G(xi, u)[c];
    };
    auto model = std::make_shared<const Model>(is_state ? state_families[c] : output_families[c]);
    if (model->n_inputs() != box.dim()) throw DimensionError("learn_uncertain_model", "family input size mismatch");
    ActiveConfig ac = cfg.active;
    ac.seed = cfg.active.seed * 1000003ULL + j;
    LearnedComponent& out = comps[j];
    out.fit = fit_worst_case(target, *model, box, ac);
    out.model = model;
    out.theta = out.fit.theta_star;
    const ConstBounds cb = constant_asym_bounds(target, *model, out.theta.values, box, cfg.bounds);
    out.lower = cb.e_min;
    out.upper = cb.e_max;
    out.wce = std::max({out.fit.certified_wce(), cb.e_min, cb.e_max});
  });

  UncertainModel um;
  um.Ts = Ts;
  um.integrator = cfg.integrator;
  um.box = box;
  um.states.assign(comps.begin(), comps.begin() + static_cast<std::ptrdiff_t>(state_families.size()));
  um.outputs.assign(comps.begin() + static_cast<std::ptrdiff_t>(state_families.size()), comps.end());
  return um;
}

OdeModel pendulum(const PendulumParams& p) {
  OdeModel m;
  m.n_state = 2;
  m.n_input = 1;
  m.n_output = 1;
  m.F = [p](const Eigen::VectorXd& xi, const Eigen::VectorXd& u) {
    Eigen::VectorXd d(2);
    d[0] = xi[1];
    d[1] = (u[0] - p.b * xi[1] - p.m * p.g * p.lc * std::sin(xi[0]) - p.k1 * xi[0] - p.k3 * xi[0] * xi[0] * xi[0]) / p.J;
    return d;
  };
  m.G = [](const Eigen::VectorXd& xi, const Eigen::VectorXd&) { return Eigen::VectorXd::Constant(1, xi[0]); };
  return m;
}

}  // namespace wcreg
