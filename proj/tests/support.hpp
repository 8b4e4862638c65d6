#pragma once

// Test-only helpers: random generators and finite-difference oracles.

#include <Eigen/Dense>
#include <functional>
#include <random>

namespace testing {

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double lo = -1.0,
                                     double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

/// Central finite differences of a scalar function.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

/// |analytic - fd| / (1 + |analytic|).
inline double gradient_mismatch(const Eigen::VectorXd& analytic, const Eigen::VectorXd& fd) {
  return (analytic - fd).norm() / (1.0 + analytic.norm());
}

}  // namespace testing
