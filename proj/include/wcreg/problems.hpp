#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wcreg/bounds.hpp"
#include "wcreg/constraints.hpp"
#include "wcreg/dynamics.hpp"
#include "wcreg/qp.hpp"

namespace wcreg {

enum class ProblemKind { kRegression, kConstraintSet, kSystemId, kMpqp, kMpc };

std::string problem_kind_name(ProblemKind k);

/// A benchmark with its default configuration. Fields not used by a kind stay empty.
struct Problem {
  std::string key;
  std::string description;
  ProblemKind kind = ProblemKind::kRegression;
  Box box;
  /// Function to approximate (or the constraint function for constraint sets).
  ScalarField f;
  ModelSpec family;
  /// Additional surrogate families compared on the same problem.
  std::vector<ModelSpec> alt_families;
  ActiveConfig active;

  BoundForm bound_form = BoundForm::kInputAsym;
  ModelSpec envelope;
  BoundsConfig bounds;

  double sign_eta = 10.0;
  double epsilon_f = 1e-6;
  DeltaConfig delta;

  std::optional<OdeModel> ode;
  double Ts = 0.0;
  SysIdConfig sysid;

  std::optional<MpQp> qp;
  std::optional<MpcSpec> mpc;
  OutputLimits limits;
};

std::vector<std::string> problem_keys();
/// Throws ConfigError for unknown keys.
Problem make_problem(const std::string& key);

double scalar_example(const Eigen::VectorXd& x);
double gaussian_bump(const Eigen::VectorXd& x);
/// <= 0 exactly on the nonconvex benchmark set.
double nonconvex_set(const Eigen::VectorXd& x);

/// Non-minimum-phase plant (s - 0.5)/(s^2 + 0.4 s + 1) in controllable canonical form,
/// discretized by zero-order hold, with the tracking MPC around it.
MpcSpec nonminphase_mpc(int horizon = 20, double Ts = 0.5);

/// First move of the QP solution as a scalar field over the parameters.
ScalarField qp_first_component(const MpQp& qp);

}  // namespace wcreg
