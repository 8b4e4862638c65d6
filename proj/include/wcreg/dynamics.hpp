#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "wcreg/active.hpp"

namespace wcreg {

/// Continuous-time model xi' = F(xi, u), tau = G(xi, u).
struct OdeModel {
  Eigen::Index n_state = 0;
  Eigen::Index n_input = 0;
  Eigen::Index n_output = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& xi, const Eigen::VectorXd& u)> F;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& xi, const Eigen::VectorXd& u)> G;
};

enum class Integrator { kHeun, kRk4 };

std::string integrator_name(Integrator m);
Integrator parse_integrator(const std::string& s);

struct IntegratorConfig {
  Integrator method = Integrator::kHeun;
  int substeps = 10;
};

/// Fixed-step explicit integration over [0, Ts] with constant input.
Eigen::VectorXd integrate_step(const OdeModel& model, const Eigen::VectorXd& xi, const Eigen::VectorXd& u, double Ts,
                               Integrator method, int substeps);

/// One learned component with its additive disturbance interval [-lower, upper].
struct LearnedComponent {
  std::shared_ptr<const Model> model;
  ParamVec theta;
  double wce = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  FitReport fit;
};

struct UncertainModel {
  double Ts = 0.0;
  IntegratorConfig integrator;
  Box box;  // over col(xi, u)
  std::vector<LearnedComponent> states;
  std::vector<LearnedComponent> outputs;

  /// Nominal one-step prediction F_hat(xi, u).
  Eigen::VectorXd predict(const Eigen::VectorXd& xi, const Eigen::VectorXd& u) const;
  Eigen::VectorXd predict_output(const Eigen::VectorXd& xi, const Eigen::VectorXd& u) const;
  /// Lower and upper interval ends of W (columns 0 and 1 hold -lower and upper).
  Eigen::MatrixXd W() const;
  Eigen::MatrixXd V() const;
};

struct SysIdConfig {
  ActiveConfig active;
  /// Budget for the constant asymmetric bounds of each component.
  DirectConfig bounds;
  IntegratorConfig integrator;
};

/// Worst-case regression of each next-state and output component over `box` (a box in (xi, u)).
UncertainModel learn_uncertain_model(const OdeModel& ode, const Box& box, double Ts,
                                     const std::vector<ModelSpec>& state_families,
                                     const std::vector<ModelSpec>& output_families, const SysIdConfig& cfg);

/// Pendulum with friction and nonlinear stiffness; state (angle, angular rate), torque input.
struct PendulumParams {
  double J = 0.05;
  double b = 0.08;
  double m = 1.0;
  double g = 9.81;
  double lc = 0.15;
  double k1 = 2.0;
  double k3 = 5.0;
};

OdeModel pendulum(const PendulumParams& p = {});

}  // namespace wcreg
