#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

#include "wcreg/box.hpp"

namespace wcreg {

struct DirectConfig {
  int max_evals = 0;  // 0 means 2000 * (number of free dimensions)
  int max_iters = 100000;
  double epsilon = 1e-4;
  bool local_polish = true;
  int polish_steps = 50;

  int budget_for(Eigen::Index n_free) const;
  void validate() const;
};

struct GlobalResult {
  Eigen::VectorXd x_star;
  double value_star = 0.0;
  int evals_used = 0;
  int iterations = 0;
  int nonfinite_evals = 0;
  /// (evaluation count, incumbent value) each time the incumbent improved.
  std::vector<std::pair<int, double>> history;
};

using ScalarField = std::function<double(const Eigen::VectorXd&)>;

/// Deterministic DIRECT maximization over a box (degenerate sides are frozen).
/// Objective evaluations of one division round may run concurrently, so the
/// objective must be reentrant. Non-finite values count as -infinity.
GlobalResult maximize(const ScalarField& objective, const Box& box, const DirectConfig& cfg = {});

/// Minimization through maximize of the negated objective; value_star is the minimum.
GlobalResult minimize_global(const ScalarField& objective, const Box& box, const DirectConfig& cfg = {});

}  // namespace wcreg
