#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace wcreg {

/// Returns f(x) and writes the gradient into grad (already sized).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsConfig {
  int memory = 10;
  int max_iters = 2000;
  double grad_tol = 1e-8;  // on the infinity norm
  /// Relative decrease below which the run counts as converged; 0 disables it.
  double rel_tol = 0.0;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 30;
  int n_starts = 5;
  std::uint64_t seed = 0;
  bool record_trace = false;

  void validate() const;
};

enum class LbfgsStatus { kConverged, kMaxIters, kLineSearchFailed };

std::string status_name(LbfgsStatus s);

/// One accepted line-search step, kept when record_trace is set.
struct LineStep {
  double alpha, phi0, dphi0, phi, dphi;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStatus status = LbfgsStatus::kMaxIters;
  std::vector<double> values;  // accepted objective sequence, starting at f(x0)
  std::vector<LineStep> trace;
  int start_index = 0;
};

LbfgsResult minimize(const Objective& objective, Eigen::VectorXd x0, const LbfgsConfig& cfg);

/// Produces the initial point of start `index` from a generator seeded per start.
using InitSampler = std::function<Eigen::VectorXd(int index, std::mt19937_64& rng)>;

/// Runs cfg.n_starts independent minimizations and keeps the lowest value
/// (smallest start index on ties). Starts that throw are skipped; if all
/// of them fail the errors are aggregated into one exception.
LbfgsResult multistart_minimize(const Objective& objective, const InitSampler& init, const LbfgsConfig& cfg);

}  // namespace wcreg
