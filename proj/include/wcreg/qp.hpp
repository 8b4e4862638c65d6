#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "wcreg/box.hpp"
#include "wcreg/model.hpp"

namespace wcreg {

/// min_z 1/2 z'Qz + (Fx + f)'z  s.t.  Az <= Bx + b, for parameters x in `box`.
struct MpQp {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd F;
  Eigen::VectorXd f;
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::VectorXd b;
  Box box;
  /// Parameter-only part x'Yx of the original cost; empty when unknown. Does not affect z*.
  Eigen::MatrixXd Y;

  Eigen::Index n_z() const { return Q.rows(); }
  Eigen::Index n_x() const { return F.cols(); }
  Eigen::Index n_constraints() const { return A.rows(); }
  void validate() const;
};

enum class QpStatus { kOptimal, kInfeasible };

std::string qp_status_name(QpStatus s);

struct QpSolution {
  Eigen::VectorXd z;
  /// One multiplier per inequality, zero off the active set.
  Eigen::VectorXd lambda;
  std::vector<Eigen::Index> active;  // sorted
  double kkt_residual = 0.0;
  QpStatus status = QpStatus::kOptimal;
  int iterations = 0;
};

/// Dual active-set solver for min 1/2 z'Qz + c'z s.t. Az <= b with Q positive definite.
/// Starts from the unconstrained minimizer, adds the most violated constraint (smallest
/// index on ties) and drops the blocking multiplier when a partial step is taken.
QpSolution solve_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                    const Eigen::VectorXd& b, double tol = 1e-9);
QpSolution solve_qp(const MpQp& prob, const Eigen::VectorXd& x, double tol = 1e-9);

/// Scaled KKT residual: max of stationarity, primal and dual infeasibility and complementarity.
double kkt_residual(const Eigen::MatrixXd& Q, const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                    const Eigen::VectorXd& b, const Eigen::VectorXd& z, const Eigen::VectorXd& lambda);

/// w(x) = -e_1' Q^{-1}(Fx + f) = coef' x + offset.
struct UnconstrainedLaw {
  Eigen::VectorXd coef;
  double offset = 0.0;

  double operator()(const Eigen::VectorXd& x) const { return coef.dot(x) + offset; }
};

UnconstrainedLaw unconstrained_law(const MpQp& prob, Eigen::Index component = 0);
double unconstrained_row(const MpQp& prob, const Eigen::VectorXd& x, Eigen::Index component = 0);

/// Region where the unconstrained minimizer is feasible: {x : Hx <= K}.
struct CriticalRegion {
  Eigen::MatrixXd H;
  Eigen::VectorXd K;
  /// Irredundant subset of the rows (unit-norm rows, same set).
  Eigen::MatrixXd H_min;
  Eigen::VectorXd K_min;
  std::vector<Eigen::Index> kept;  // indices into H

  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
};

/// H0 = -AQ^{-1}F - B, K0 = b + AQ^{-1}f, plus a minimal representation.
CriticalRegion cr0(const MpQp& prob, double rho = 1e-8);

/// Linear MPC for reference tracking with input-rate weighting and softened output bounds.
/// Infinite bounds are skipped when condensing.
struct MpcSpec {
  Eigen::MatrixXd A, B, C;
  int N = 1, Nu = 1, Nc = 1;
  Eigen::MatrixXd Q_tau, Q_du;
  double rho2 = 0.0, rho1 = 0.0;
  Eigen::VectorXd u_min, u_max, du_min, du_max, tau_min, tau_max, V_min, V_max;
  /// Region of interest for x = (xi0, r, u_prev).
  Box region;
  double Ts = 1.0;

  Eigen::Index n_xi() const { return A.rows(); }
  Eigen::Index n_u() const { return B.cols(); }
  Eigen::Index n_tau() const { return C.rows(); }
  Eigen::Index n_x() const { return n_xi() + n_tau() + n_u(); }
  void validate() const;
};

/// Slack diagonal used when rho2 = 0 so that Q stays positive definite.
inline constexpr double kSlackRegularization = 1e-9;

/// z = (u_0, ..., u_{Nu-1}, zeta), x = (xi0, r, u_prev).
MpQp condense_mpc(const MpcSpec& spec);

/// Stage-wise cost of the MPC problem by forward simulation (reference oracle for condensing).
double mpc_cost(const MpcSpec& spec, const Eigen::VectorXd& z, const Eigen::VectorXd& x);
/// Largest violation of the stage constraints (u, du, tau softened, zeta >= 0); <= 0 when feasible.
double mpc_max_violation(const MpcSpec& spec, const Eigen::VectorXd& z, const Eigen::VectorXd& x);

/// Zero-order-hold discretization of xdot = Ac x + Bc u.
void zoh_discretize(const Eigen::MatrixXd& Ac, const Eigen::MatrixXd& Bc, double Ts, Eigen::MatrixXd& Ad,
                    Eigen::MatrixXd& Bd);

/// Output limits for the gated model; `rate` tightens them around the previous input.
struct OutputLimits {
  double y_min = -std::numeric_limits<double>::infinity();
  double y_max = std::numeric_limits<double>::infinity();
  std::optional<RateLimit> rate;
};

/// sat(delta(x; beta) w(x) + (1 - delta(x; beta)) N(x; theta)) with delta the PWA indicator of
/// the minimal CR0 and beta trainable.
ModelSpec mpc_gated_model(const MpQp& prob, const ModelSpec& inner, const OutputLimits& limits,
                          double beta = 1.0, Eigen::Index component = 0);

/// Limits for the first move of an MPC problem: u bounds and rate bounds around u_prev.
OutputLimits mpc_output_limits(const MpcSpec& spec);

struct Trajectory {
  Eigen::MatrixXd xi;   // (steps + 1) x n_xi
  Eigen::MatrixXd u;    // steps x n_u
  Eigen::MatrixXd tau;  // (steps + 1) x n_tau
  Eigen::MatrixXd r;    // steps x n_tau
};

using Controller = std::function<Eigen::VectorXd(const Eigen::VectorXd& x)>;
using Reference = std::function<Eigen::VectorXd(int t)>;

/// Closed loop xi+ = A xi + B u, tau = C xi, with u = controller(xi, r(t), u_prev).
Trajectory simulate_closed_loop(const MpcSpec& spec, const Controller& controller, const Eigen::VectorXd& xi0,
                                const Reference& reference, int steps, const Eigen::VectorXd& u_prev0);

/// First n_u components of the QP solution.
Controller exact_mpc_controller(const MpQp& prob, Eigen::Index n_u = 1);

/// Random mpQP with Q = W'W/n_z + I, bounds z_lo <= z <= z_hi and m general rows chosen
/// so that z = 0 is feasible for every x in the box.
MpQp random_mpqp(Eigen::Index n_x, Eigen::Index n_z, Eigen::Index m, double z_lo, double z_hi, const Box& box,
                 std::uint64_t seed);

}  // namespace wcreg
