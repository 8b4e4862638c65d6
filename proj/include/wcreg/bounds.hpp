#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <utility>

#include "wcreg/active.hpp"

namespace wcreg {

enum class BoundForm { kConstSym, kConstAsym, kInputSym, kInputAsym };

std::string bound_form_name(BoundForm f);
BoundForm parse_bound_form(const std::string& s);

struct BoundsConfig {
  DirectConfig global;
  LbfgsConfig lbfgs;
  double gamma = 10.0;
  EnvelopeMu mu = EnvelopeMu::kIdentity;
  double rho_psi = 1e-3;

  void validate() const;
};

/// Error bounds around f_hat(.; theta*): f(x) - f_hat(x) lies in [-lower(x), upper(x)].
struct BoundsReport {
  BoundForm form = BoundForm::kConstSym;
  Box box;
  double wce = 0.0;
  double const_lower = 0.0;  // e*_min
  double const_upper = 0.0;  // e*_max
  /// Symmetric envelopes use env_u / psi_u / kappa_u only.
  std::shared_ptr<const Model> env_u, env_l;
  ParamVec psi_u, psi_l;
  double kappa_u = 0.0, kappa_l = 0.0;
  int certification_evals = 0;
};

struct ConstBounds {
  double e_min = 0.0;
  double e_max = 0.0;
  int evals_used = 0;
};

/// e*_min = max_x maxzero(f_hat - f), e*_max = max_x maxzero(f - f_hat).
ConstBounds constant_asym_bounds(const ScalarField& f, const Model& model, const Eigen::VectorXd& theta,
                                 const Box& box, const DirectConfig& dc);

/// Residuals y_k - f_hat(x_k) on a dataset.
Eigen::VectorXd residuals(const Model& model, const Eigen::VectorXd& theta, const Dataset& data);

LbfgsResult fit_envelope_sym(const Model& env, const Eigen::MatrixXd& xs, const Eigen::VectorXd& errors,
                             const BoundsConfig& cfg);

/// Both envelopes trained jointly; returns (psi_u, psi_l).
std::pair<Eigen::VectorXd, Eigen::VectorXd> fit_envelope_asym(const Model& env_u, const Model& env_l,
                                                              const Eigen::MatrixXd& xs, const Eigen::VectorXd& errors,
                                                              const BoundsConfig& cfg, double* loss = nullptr);

/// max_x |f - f_hat| / eps(x).
GlobalResult calibrate_kappa_sym(const ScalarField& f, const Model& model, const Eigen::VectorXd& theta,
                                 const Model& env, const Eigen::VectorXd& psi, const Box& box, const DirectConfig& dc);

/// (max_x maxzero(f - f_hat) / eps_u(x), max_x maxzero(f_hat - f) / eps_l(x)).
std::pair<GlobalResult, GlobalResult> calibrate_kappa_asym(const ScalarField& f, const Model& model,
                                                           const Eigen::VectorXd& theta, const Model& env_u,
                                                           const Eigen::VectorXd& psi_u, const Model& env_l,
                                                           const Eigen::VectorXd& psi_l, const Box& box,
                                                           const DirectConfig& dc);

/// Runs the whole certification for one form. `wce` is the certified uniform bound;
/// envelopes are fitted on the samples of `data`.
BoundsReport certify_bounds(const ScalarField& f, const Model& model, const Eigen::VectorXd& theta, double wce,
                            const Dataset& data, const Box& box, BoundForm form, const ModelSpec& envelope,
                            const BoundsConfig& cfg);

/// (lower, upper) at x; input-dependent forms are clamped at wce.
std::pair<double, double> bound_at(const BoundsReport& report, const Eigen::VectorXd& x);

struct CenteredPrediction {
  double center = 0.0;
  double radius = 0.0;
};

/// Centered predictor and symmetric radius built from asymmetric bounds.
CenteredPrediction symmetrize(const Model& model, const Eigen::VectorXd& theta, const BoundsReport& report,
                              const Eigen::VectorXd& x);

}  // namespace wcreg
