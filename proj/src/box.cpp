#include "wcreg/box.hpp"

#include <cmath>

#include "wcreg/error.hpp"

namespace wcreg {

Box::Box(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() == 0) throw DimensionError("Box", "dimension must be at least 1");
  if (lower.size() != upper.size()) throw DimensionError("Box", "lower/upper size mismatch");
  if (!lower.allFinite() || !upper.allFinite()) throw ConfigError("Box", "bounds must be finite");
  if ((lower.array() > upper.array()).any()) throw ConfigError("Box", "lower > upper");
}

Box Box::unit(Eigen::Index n) { return uniform(n, 0.0, 1.0); }

Box Box::uniform(Eigen::Index n, double lo, double hi) {
  return Box(Eigen::VectorXd::Constant(n, lo), Eigen::VectorXd::Constant(n, hi));
}

bool Box::contains(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != dim()) return false;
  return ((x.array() >= lower.array() - tol) && (x.array() <= upper.array() + tol)).all();
}

Eigen::VectorXd Box::clamp(const Eigen::VectorXd& x) const {
  return x.cwiseMax(lower).cwiseMin(upper);
}

}  // namespace wcreg
