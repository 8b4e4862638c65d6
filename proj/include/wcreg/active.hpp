#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "wcreg/box.hpp"
#include "wcreg/direct.hpp"
#include "wcreg/lbfgs.hpp"
#include "wcreg/loss.hpp"
#include "wcreg/model.hpp"
#include "wcreg/sampling.hpp"

namespace wcreg {

struct ActiveConfig {
  Eigen::Index n_initial = 20;
  int max_steps = 30;
  double err_threshold = 1e-3;
  Sampler sampler = Sampler::kLhs;
  TrainConfig train;
  LbfgsConfig lbfgs;
  DirectConfig global;
  /// Run a fresh DIRECT pass on the selected parameters after the loop.
  bool recertify = true;
  DirectConfig recert;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class StopReason { kThreshold, kBudget };
std::string stop_reason_name(StopReason r);

struct IterationRecord {
  int iteration = 0;
  Eigen::Index n_samples = 0;  // N when the model was trained
  double error = 0.0;          // e_N
  double train_loss = 0.0;
  int direct_evals = 0;
  bool failed = false;
  double wall_seconds = 0.0;
};

struct FitReport {
  ParamVec theta_star;
  double wce = 0.0;
  /// Fresh certification of theta_star; NaN when disabled.
  double recertified_wce = 0.0;
  int recert_evals = 0;
  /// i*: sample count N at which theta_star was trained.
  Eigen::Index best_iter = 0;
  std::vector<double> error_history;
  std::vector<IterationRecord> iterations;
  Dataset dataset_final;
  StopReason stop_reason = StopReason::kBudget;
  int failed_iterations = 0;

  /// Samples added by the active loop, in acquisition order.
  std::vector<std::pair<Eigen::VectorXd, double>> acquired_points() const;
  /// max(wce, recertified_wce), the bound used downstream.
  double certified_wce() const;
};

/// |f(x) - f_hat(x; theta)| with the model output passed through the loss transform.
double abs_error(const ScalarField& f, const Model& model, const Eigen::VectorXd& theta, const TrainConfig& train,
                 const Eigen::VectorXd& x);

/// Multistart L-BFGS on the smooth L-infinity loss. Start 0 uses `warm`
/// when it is non-empty; the remaining starts draw fresh initializations.
LbfgsResult train_minimax(const Model& model, const Dataset& data, const TrainConfig& train, const LbfgsConfig& lbfgs,
                          const Eigen::VectorXd& warm);

/// Worst-case regression with active learning. The target must be reentrant.
FitReport fit_worst_case(const ScalarField& f, const Model& model, const Box& box, const ActiveConfig& cfg);

/// Same loop starting from a caller-supplied initial dataset.
FitReport fit_worst_case(const ScalarField& f, const Model& model, const Box& box, const ActiveConfig& cfg,
                         Dataset initial);

/// Passive baseline: least-squares training on a fixed design of n_samples
/// points, certified like the active fit (wce plus optional recertification).
FitReport fit_passive_mse(const ScalarField& f, const Model& model, const Box& box, Eigen::Index n_samples,
                          const ActiveConfig& cfg);

}  // namespace wcreg
