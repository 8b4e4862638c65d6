#include "wcreg/problems.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "wcreg/error.hpp"

namespace wcreg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string problem_kind_name(ProblemKind k) {
  switch (k) {
    case ProblemKind::kRegression: return "regression";
    case ProblemKind::kConstraintSet: return "constraint-set";
    case ProblemKind::kSystemId: return "system-id";
    case ProblemKind::kMpqp: return "mpqp";
    case ProblemKind::kMpc: return "mpc";
  }
  return "unknown";
}

double scalar_example(const VectorXd& v) {
  const double x = v[0];
  const double s = std::sin(x - x * x / 10.0) + std::pow(x / 10.0, 3) - 4.0 * x / 10.0;
  // e^{-x} / (1 + e^{-x}) written as the logistic of -x.
  return s * logistic(-x);
}

double gaussian_bump(const VectorXd& x) {
  return std::exp(-30.0 * ((x[0] - 0.5) * (x[0] - 0.5) + (x[1] - 0.5) * (x[1] - 0.5)));
}

double nonconvex_set(const VectorXd& x) {
  const double a = x[0], b = x[1];
  return a * a + b * b * b * b + a * a * a / 3.0 - b * b * b - b / 2.0 - 1.0;
}

MpcSpec nonminphase_mpc(int horizon, double Ts) {
  const double inf = std::numeric_limits<double>::infinity();
  MpcSpec s;
  const MatrixXd Ac = (MatrixXd(2, 2) << 0.0, 1.0, -1.0, -0.4).finished();
  const MatrixXd Bc = (MatrixXd(2, 1) << 0.0, 1.0).finished();
  zoh_discretize(Ac, Bc, Ts, s.A, s.B);
  s.C = (MatrixXd(1, 2) << -0.5, 1.0).finished();
  s.N = s.Nu = s.Nc = horizon;
  s.Q_tau = MatrixXd::Constant(1, 1, 1.0);
  s.Q_du = MatrixXd::Constant(1, 1, 0.1);
  s.rho2 = 100.0;
  s.rho1 = 0.0;
  s.u_min = VectorXd::Constant(1, -inf);
  s.u_max = VectorXd::Constant(1, inf);
  s.du_min = VectorXd::Constant(1, -0.5);
  s.du_max = VectorXd::Constant(1, 0.5);
  s.tau_min = VectorXd::Constant(1, -1.2);
  s.tau_max = VectorXd::Constant(1, 1.2);
  s.V_min = VectorXd::Constant(1, 1.0);
  s.V_max = VectorXd::Constant(1, 1.0);
  s.region = Box((VectorXd(4) << -3.0, -3.0, -1.0, -2.5).finished(), (VectorXd(4) << 3.0, 3.0, 1.0, 2.5).finished());
  s.Ts = Ts;
  s.validate();
  return s;
}

ScalarField qp_first_component(const MpQp& qp) {
  auto shared = std::make_shared<const MpQp>(qp);
  return [shared](const VectorXd& x) {
    const QpSolution sol = solve_qp(*shared, x);
    if (sol.status != QpStatus::kOptimal) throw NumericError("qp_first_component", "QP infeasible at parameter");
    return sol.z[0];
  };
}

std::vector<std::string> problem_keys() {
  return {"scalar-example", "gaussian", "nonconvex-set", "pendulum", "random-mpqp", "mpc-nonminphase"};
}

namespace {

Problem scalar_problem() {
  Problem p;
  p.key = "scalar-example";
  p.description =
      "1-D oscillating function on [-10, 10]; tanh network with 2 hidden units. "
      "Defaults N0=20, M=30, err threshold 1e-3, gamma=10, nu=0, r=1e-8.";
  p.box = Box::uniform(1, -10.0, 10.0);
  p.f = scalar_example;
  p.family = ModelSpec::mlp(1, {2}, Activation::tanh());
  p.active.n_initial = 20;
  p.active.max_steps = 30;
  p.active.err_threshold = 1e-3;
  p.active.train.l2_reg = 1e-8;
  p.active.global.max_evals = 2000;
  p.active.recert.max_evals = 4000;
  p.envelope = ModelSpec::envelope(1, {2}, Activation::tanh(), Activation::softplus());
  p.bounds.rho_psi = 1e-3;
  p.bounds.global.max_evals = 4000;
  return p;
}

Problem gaussian_problem() {
  Problem p;
  p.key = "gaussian";
  p.description =
      "exp(-30 |x - (0.5, 0.5)|^2) on [0, 1]^2; leaky-ReLU network 10-5, envelopes 20-10. "
      "Defaults N0=100, M=50. Reference run time about 107 s (not a target).";
  p.box = Box::unit(2);
  p.f = gaussian_bump;
  p.family = ModelSpec::mlp(2, {10, 5}, Activation::leaky_relu(0.1));
  p.active.n_initial = 100;
  p.active.max_steps = 50;
  p.active.err_threshold = 1e-3;
  p.active.train.l2_reg = 1e-8;
  p.active.global.max_evals = 4000;
  p.active.recert.max_evals = 20000;
  p.envelope = ModelSpec::envelope(2, {20, 10}, Activation::leaky_relu(0.1), Activation::softplus());
  p.bounds.rho_psi = 1e-8;
  p.bounds.global.max_evals = 4000;
  return p;
}

Problem nonconvex_problem() {
  Problem p;
  p.key = "nonconvex-set";
  p.kind = ProblemKind::kConstraintSet;
  p.description =
      "Convex inner approximation of {x1^2 + x2^4 + x1^3/3 - x2^3 - x2/2 <= 1} on [-2, 2]^2 with a "
      "10-plane max-affine surrogate (and an input-convex 5-5 network). Defaults N0=50, M=50, eta=10, "
      "r=1e-4. Reference Delta_f about -0.078 (max-affine) and -0.19 (input-convex), stochastic.";
  p.box = Box::uniform(2, -2.0, 2.0);
  p.f = nonconvex_set;
  p.family = ModelSpec::max_affine(2, 10);
  p.alt_families = {ModelSpec::input_convex(2, {5, 5})};
  p.active.n_initial = 50;
  p.active.max_steps = 50;
  p.active.err_threshold = 1e-3;
  p.active.train.l2_reg = 1e-4;
  p.active.global.max_evals = 4000;
  p.active.recert.max_evals = 4000;
  p.delta.global.max_evals = 20000;
  return p;
}

Problem pendulum_problem() {
  Problem p;
  p.key = "pendulum";
  p.kind = ProblemKind::kSystemId;
  p.description =
      "Pendulum with friction and cubic stiffness, Ts=0.1 s, Heun with 10 substeps, xi1 in [-pi, pi], "
      "xi2 in [-5, 5], u in [-2, 2] (the torque range is printed as a degenerate interval in the source; "
      "the symmetric range is used). ReLU network with 10 units and a linear bypass. Defaults N0=100, M=50, "
      "r=1e-4. Reference W about [-3.17, 3.17] x [-0.078, 0.078], stochastic.";
  const double pi = std::numbers::pi;
  p.box = Box((VectorXd(3) << -pi, -5.0, -2.0).finished(), (VectorXd(3) << pi, 5.0, 2.0).finished());
  p.ode = pendulum();
  p.Ts = 0.1;
  p.family = ModelSpec::mlp(3, {10}, Activation::relu(), true);
  p.sysid.active.n_initial = 100;
  p.sysid.active.max_steps = 50;
  p.sysid.active.err_threshold = 1e-3;
  p.sysid.active.train.l2_reg = 1e-4;
  p.sysid.active.global.max_evals = 4000;
  p.sysid.active.recert.max_evals = 10000;
  p.sysid.bounds.max_evals = 30000;
  p.sysid.integrator = {Integrator::kHeun, 10};
  p.active = p.sysid.active;
  return p;
}

Problem mpqp_problem() {
  Problem p;
  p.key = "random-mpqp";
  p.kind = ProblemKind::kMpqp;
  p.description =
      "Random mpQP (instance seed 2) with 2 parameters in [-2, 2]^2, 10 variables, 30 inequalities and "
      "bounds -1 <= z <= 1; approximates z1. About 160 active-set regions. Gated ReLU network 5-5 with "
      "bypass, saturated to [-1, 1]. Defaults N0=20, M=30, envelope r=1e-4.";
  p.box = Box::uniform(2, -2.0, 2.0);
  p.qp = random_mpqp(2, 10, 30, -1.0, 1.0, p.box, 2);
  p.f = qp_first_component(*p.qp);
  p.limits.y_min = -1.0;
  p.limits.y_max = 1.0;
  p.family = mpc_gated_model(*p.qp, ModelSpec::mlp(2, {5, 5}, Activation::relu(), true), p.limits);
  p.active.n_initial = 20;
  p.active.max_steps = 30;
  p.active.err_threshold = 1e-3;
  p.active.train.l2_reg = 1e-8;
  p.active.global.max_evals = 4000;
  p.active.recert.max_evals = 10000;
  p.envelope = ModelSpec::envelope(2, {5, 5}, Activation::relu(), Activation::softplus());
  p.bounds.rho_psi = 1e-4;
  p.bounds.global.max_evals = 4000;
  return p;
}

Problem mpc_problem() {
  Problem p;
  p.key = "mpc-nonminphase";
  p.kind = ProblemKind::kMpc;
  p.description =
      "Tracking MPC of (s - 0.5)/(s^2 + 0.4 s + 1), zero-order hold at Ts=0.5 s, N=Nu=Nc=20, "
      "|du| <= 0.5, |tau| <= 1.2 softened with unit ECR vectors, Q_tau=1, Q_du=0.1, rho2=100, rho1=0. "
      "Parameters (xi, r, u_prev) in [-3,3]x[-3,3]x[-1,1]x[-2.5,2.5] (the source prints equal lower and "
      "upper bounds; the symmetric box is used). Gated ReLU network 20-10 with bypass, rate-limited "
      "around u_prev. Defaults N0=1000, M=1000, r=1e-4, nu=1e-4. Reference WCE about 0.044, stochastic.";
  p.mpc = nonminphase_mpc(20, 0.5);
  p.box = p.mpc->region;
  p.qp = condense_mpc(*p.mpc);
  p.f = qp_first_component(*p.qp);
  p.limits = mpc_output_limits(*p.mpc);
  p.family = mpc_gated_model(*p.qp, ModelSpec::mlp(4, {20, 10}, Activation::relu(), true), p.limits);
  p.active.n_initial = 1000;
  p.active.max_steps = 1000;
  p.active.err_threshold = 1e-3;
  p.active.train.l2_reg = 1e-4;
  p.active.train.nu = 1e-4;
  p.active.global.max_evals = 8000;
  p.active.recert.max_evals = 20000;
  p.bound_form = BoundForm::kConstAsym;
  p.envelope = ModelSpec::envelope(4, {20, 10}, Activation::relu(), Activation::softplus());
  p.bounds.rho_psi = 1e-4;
  p.bounds.global.max_evals = 8000;
  return p;
}

}  // namespace

Problem make_problem(const std::string& key) {
  if (key == "scalar-example") return scalar_problem();
  if (key == "gaussian") return gaussian_problem();
  if (key == "nonconvex-set") return nonconvex_problem();
  if (key == "pendulum") return pendulum_problem();
  if (key == "random-mpqp") return mpqp_problem();
  if (key == "mpc-nonminphase") return mpc_problem();
  throw ConfigError("problem", "unknown problem '" + key + "'");
}

}  // namespace wcreg
