#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "wcreg/model.hpp"

namespace wcreg {

struct TrainConfig {
  double gamma = 10.0;
  double nu = 0.0;
  double l2_reg = 0.0;
  /// When set, model outputs pass through tanh(sign_eta * .) inside the loss.
  std::optional<double> sign_eta;

  void validate() const;
};

/// Samples stored column-wise: xs is n x N.
struct Dataset {
  Eigen::MatrixXd xs;
  Eigen::VectorXd ys;
  std::vector<bool> acquired;

  Eigen::Index size() const { return ys.size(); }
  void append(const Eigen::VectorXd& x, double y, bool is_acquired);
  void validate() const;
};

struct LossValue {
  double value = 0.0;
  Eigen::VectorXd grad;
};

/// l2_reg |theta|^2 + (1/gamma) log sum_k (e^{gamma e_k} + e^{-gamma e_k}) + (nu/N) sum_k e_k^2,
/// e_k = y_k - prediction_k.
LossValue smooth_linf_loss(const Model& model, const Eigen::VectorXd& theta, const Dataset& data,
                           const TrainConfig& cfg);

/// l2_reg |theta|^2 + (1/N) sum_k (y_k - f(x_k))^2, the usual least-squares objective.
LossValue mse_loss(const Model& model, const Eigen::VectorXd& theta, const Dataset& data, double l2_reg);

/// Predictions as the loss sees them (sign-transformed when cfg.sign_eta is set).
Eigen::VectorXd loss_predictions(const Model& model, const Eigen::VectorXd& theta, const Eigen::MatrixXd& xs,
                                 const TrainConfig& cfg);

enum class EnvelopeMu { kIdentity, kSquare };

/// rho |psi|^2 + (1/N) sum mu(eps_k) + (1/gamma) log(1 + sum_k e^{gamma(|e_k| - eps_k)}).
LossValue envelope_loss_sym(const Model& env, const Eigen::VectorXd& psi, const Eigen::MatrixXd& xs,
                            const Eigen::VectorXd& errors, double gamma, EnvelopeMu mu, double rho_psi);

struct AsymLossValue {
  double value = 0.0;
  Eigen::VectorXd grad_upper;
  Eigen::VectorXd grad_lower;
};

/// Joint upper/lower envelope objective. Upper violation is e_k - eps_u(x_k), lower
/// violation is -e_k - eps_l(x_k). With `additive_mu` the mu term becomes
/// mu(eps_u) + mu(eps_l), otherwise mu(eps_u + eps_l).
AsymLossValue envelope_loss_asym(const Model& env_u, const Eigen::VectorXd& psi_u, const Model& env_l,
                                 const Eigen::VectorXd& psi_l, const Eigen::MatrixXd& xs,
                                 const Eigen::VectorXd& errors, double gamma, EnvelopeMu mu, double rho_psi,
                                 bool additive_mu = false);

}  // namespace wcreg
