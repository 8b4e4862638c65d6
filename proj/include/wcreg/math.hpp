#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>

#include "wcreg/error.hpp"

namespace wcreg {

template <typename Scalar>
Scalar maxzero(Scalar v) {
  return v > Scalar(0) ? v : Scalar(0);
}

/// log(1 + e^t) without overflow.
template <typename Scalar>
Scalar softplus(Scalar t) {
  using std::abs, std::exp, std::log1p;
  return maxzero(t) + log1p(exp(-abs(t)));
}

template <typename Scalar>
Scalar logistic(Scalar t) {
  using std::exp;
  if (t >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-t));
  const Scalar e = exp(t);
  return e / (Scalar(1) + e);
}

/// Inverse of softplus for positive arguments.
template <typename Scalar>
Scalar softplus_inverse(Scalar v) {
  using std::exp, std::expm1, std::log;
  if (v > Scalar(30)) return v + log(-std::expm1(-v));
  return log(expm1(v));
}

/// Stable log(sum_i exp(a_i)).
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::ArrayBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  const Scalar m = a.maxCoeff();
  if (!std::isfinite(static_cast<double>(m))) return m;
  return m + std::log((a - m).exp().sum());
}

/// Stable log-sum-exp that also returns the softmax weights.
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::ArrayBase<Derived>& a,
                                     Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1>& weights) {
  using Scalar = typename Derived::Scalar;
  const Scalar m = a.maxCoeff();
  weights = (a - m).exp();
  const Scalar s = weights.sum();
  weights /= s;
  return m + std::log(s);
}

template <typename Scalar>
Scalar sat_hard(Scalar y, Scalar y_min, Scalar y_max) {
  return std::min(std::max(y, y_min), y_max);
}

/// Smooth saturation y_max + log((1+e^{-eta(y-y_min)}) / (1+e^{-eta(y-y_max)})) / eta,
/// rearranged so the difference of the two softplus terms never cancels catastrophically.
template <typename Scalar>
Scalar sat_smooth(Scalar y, Scalar y_min, Scalar y_max, Scalar eta) {
  using std::exp, std::log1p;
  const Scalar a = -eta * (y - y_min);
  const Scalar c = -eta * (y - y_max);
  // Below y_min both softplus terms are large; anchoring at y_min keeps the result monotone.
  if (a > Scalar(0) && c > Scalar(0)) return y_min + (log1p(exp(-a)) - log1p(exp(-c))) / eta;
  return y_max + (softplus(a) - softplus(c)) / eta;
}

/// Partial derivatives of sat_smooth.
template <typename Scalar>
struct SatSmoothGrad {
  Scalar value, d_y, d_min, d_max, d_eta;
};

template <typename Scalar>
SatSmoothGrad<Scalar> sat_smooth_grad(Scalar y, Scalar y_min, Scalar y_max, Scalar eta) {
  const Scalar a = -eta * (y - y_min);
  const Scalar c = -eta * (y - y_max);
  const Scalar la = logistic(a);
  const Scalar lc = logistic(c);
  SatSmoothGrad<Scalar> g;
  g.value = sat_smooth(y, y_min, y_max, eta);
  g.d_y = lc - la;
  g.d_min = la;
  g.d_max = Scalar(1) - lc;
  const Scalar diff = (g.value - y_max) * eta;
  g.d_eta = -diff / (eta * eta) + (-la * (y - y_min) + lc * (y - y_max)) / eta;
  return g;
}

/// Vector forms; all operations component-wise.
Eigen::VectorXd sat_hard(const Eigen::VectorXd& y, const Eigen::VectorXd& y_min, const Eigen::VectorXd& y_max);
Eigen::VectorXd sat_smooth(const Eigen::VectorXd& y, const Eigen::VectorXd& y_min, const Eigen::VectorXd& y_max,
                           double eta);

/// Smooth sign surrogate tanh(eta * value).
double sign_transform(double value, double eta);

/// sign(v) = -1 for v <= 0 and +1 for v > 0.
inline double sign_le0(double v) { return v > 0.0 ? 1.0 : -1.0; }

enum class ActivationKind { kTanh, kRelu, kLeakyRelu, kSoftplus, kSigmoid, kLinear };

struct Activation {
  ActivationKind kind = ActivationKind::kTanh;
  double slope = 0.1;  // leaky-relu only

  static Activation tanh() { return {ActivationKind::kTanh, 0.0}; }
  static Activation relu() { return {ActivationKind::kRelu, 0.0}; }
  static Activation leaky_relu(double s) { return {ActivationKind::kLeakyRelu, s}; }
  static Activation softplus() { return {ActivationKind::kSoftplus, 0.0}; }
  static Activation sigmoid() { return {ActivationKind::kSigmoid, 0.0}; }
  static Activation linear() { return {ActivationKind::kLinear, 0.0}; }

  double operator()(double z) const {
    switch (kind) {
      case ActivationKind::kTanh: return std::tanh(z);
      case ActivationKind::kRelu: return z > 0.0 ? z : 0.0;
      case ActivationKind::kLeakyRelu: return z > 0.0 ? z : slope * z;
      case ActivationKind::kSoftplus: return wcreg::softplus(z);
      case ActivationKind::kSigmoid: return logistic(z);
      case ActivationKind::kLinear: return z;
    }
    return z;
  }

  /// Derivative given the pre-activation z; ReLU'(0) = 0.
  double derivative(double z) const {
    switch (kind) {
      case ActivationKind::kTanh: {
        const double t = std::tanh(z);
        return 1.0 - t * t;
      }
      case ActivationKind::kRelu: return z > 0.0 ? 1.0 : 0.0;
      case ActivationKind::kLeakyRelu: return z > 0.0 ? 1.0 : slope;
      case ActivationKind::kSoftplus: return logistic(z);
      case ActivationKind::kSigmoid: {
        const double s = logistic(z);
        return s * (1.0 - s);
      }
      case ActivationKind::kLinear: return 1.0;
    }
    return 1.0;
  }

  bool nonnegative() const {
    return kind == ActivationKind::kRelu || kind == ActivationKind::kSoftplus || kind == ActivationKind::kSigmoid;
  }

  std::string name() const;
  static Activation parse(const std::string& s);
};

}  // namespace wcreg
