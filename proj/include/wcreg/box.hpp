#pragma once

#include <Eigen/Dense>

namespace wcreg {

/// Axis-aligned compact domain. Degenerate sides (lower == upper) are allowed.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Box() = default;
  Box(Eigen::VectorXd lo, Eigen::VectorXd hi);

  static Box unit(Eigen::Index n);
  static Box uniform(Eigen::Index n, double lo, double hi);

  Eigen::Index dim() const { return lower.size(); }
  Eigen::VectorXd center() const { return 0.5 * (lower + upper); }
  Eigen::VectorXd width() const { return upper - lower; }

  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const;

  /// Maps a point of the unit cube onto the box.
  Eigen::VectorXd from_unit(const Eigen::VectorXd& u) const {
    return lower + width().cwiseProduct(u);
  }
};

}  // namespace wcreg
