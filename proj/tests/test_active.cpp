#include <doctest.h>

#include <cmath>
#include <numeric>

#include "wcreg/active.hpp"
#include "wcreg/error.hpp"

using namespace wcreg;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ActiveConfig small_config(std::uint64_t seed) {
  ActiveConfig cfg;
  cfg.n_initial = 10;
  cfg.max_steps = 8;
  cfg.err_threshold = 0.0;
  cfg.lbfgs.n_starts = 3;
  cfg.lbfgs.max_iters = 300;
  cfg.global.max_evals = 300;
  cfg.recert.max_evals = 600;
  cfg.seed = seed;
  return cfg;
}

double bumpy(const VectorXd& x) { return std::sin(3.0 * x[0]) + 0.5 * x[0] * x[0]; }

}  // namespace

TEST_CASE("latin hypercube stratification") {
  CHECK(lhs_sample(Box::unit(3), 1, 4).cols() == 1);
  CHECK(Box::unit(3).contains(lhs_sample(Box::unit(3), 1, 4).col(0)));

  const MatrixXd q = lhs_sample(Box::unit(1), 4, 7);
  std::vector<int> quarters(4, 0);
  for (Eigen::Index k = 0; k < 4; ++k) ++quarters[std::min(3, static_cast<int>(q(0, k) * 4.0))];
  for (int c : quarters) CHECK(c == 1);

  const Box box((VectorXd(2) << -2.0, 10.0).finished(), (VectorXd(2) << 3.0, 11.0).finished());
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const MatrixXd X = lhs_sample(box, 100, seed);
    for (Eigen::Index i = 0; i < 2; ++i) {
      std::vector<int> bins(100, 0);
      for (Eigen::Index k = 0; k < 100; ++k) {
        const double t = (X(i, k) - box.lower[i]) / (box.upper[i] - box.lower[i]);
        ++bins[std::min(99, static_cast<int>(t * 100.0))];
      }
      for (int c : bins) CHECK(c == 1);
    }
  }
  CHECK(lhs_sample(box, 50, 9) == lhs_sample(box, 50, 9));
}

TEST_CASE("grid and uniform designs") {
  const MatrixXd G = grid_sample(Box::unit(2), 3);
  CHECK(G.cols() == 9);
  int corners = 0;
  for (Eigen::Index k = 0; k < 9; ++k)
    if ((G(0, k) == 0.0 || G(0, k) == 1.0) && (G(1, k) == 0.0 || G(1, k) == 1.0)) ++corners;
  CHECK(corners == 4);
  CHECK_THROWS_AS(grid_sample(Box::unit(2), 1), ConfigError);

  const Box box = Box::uniform(3, -1.0, 3.0);
  const MatrixXd U = uniform_sample(box, 1000, 5);
  for (Eigen::Index k = 0; k < U.cols(); ++k) CHECK(box.contains(U.col(k)));
  // Uniform on [-1, 3]: mean 1, standard error 4 / sqrt(12 * 1000).
  const double se = 4.0 / std::sqrt(12.0 * 1000.0);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(std::abs(U.row(i).mean() - 1.0) <= 3.0 * se);
}

TEST_CASE("linear target in the linear family is fitted exactly") {
  const VectorXd w = (VectorXd(2) << 0.7, -1.3).finished();
  const ScalarField f = [&](const VectorXd& x) { return w.dot(x) + 0.25; };
  ActiveConfig cfg = small_config(3);
  cfg.err_threshold = 1e-6;
  const FitReport r = fit_worst_case(f, Model(ModelSpec::linear(2)), Box::uniform(2, -1, 1), cfg);
  CHECK(r.error_history.size() == 1);
  CHECK(r.wce <= 1e-6);
  CHECK(r.stop_reason == StopReason::kThreshold);
}

TEST_CASE("active loop bookkeeping") {
  const Box box = Box::uniform(1, -2.0, 2.0);
  const Model m(ModelSpec::mlp(1, {3}, Activation::tanh()));
  const ActiveConfig cfg = small_config(11);
  const FitReport r = fit_worst_case(bumpy, m, box, cfg);

  CHECK(r.stop_reason == StopReason::kBudget);
  CHECK(r.error_history.size() == 8);
  CHECK(r.dataset_final.size() == 18);
  CHECK(r.iterations.front().n_samples == 10);
  CHECK(r.iterations.back().n_samples == 17);

  // i* is the first index attaining the smallest recorded error.
  const auto it = std::min_element(r.error_history.begin(), r.error_history.end());
  CHECK(r.best_iter == 10 + (it - r.error_history.begin()));
  CHECK(r.wce == *it);

  double best = 1e300;
  for (double e : r.error_history) {
    const double next = std::min(best, e);
    CHECK(next <= best);
    best = next;
  }

  const auto acquired = r.acquired_points();
  CHECK(acquired.size() == 8);
  for (const auto& [x, y] : acquired) {
    CHECK(box.contains(x));
    CHECK(y == bumpy(x));
  }

  // The recorded error equals the model error at the point acquired next.
  CHECK(r.error_history[it - r.error_history.begin()] ==
        doctest::Approx(abs_error(bumpy, m, r.theta_star.values, cfg.train,
                                  acquired[it - r.error_history.begin()].first))
            .epsilon(1e-14));
}

TEST_CASE("reported error agrees with an independent certification") {
  const Box box = Box::uniform(1, -2.0, 2.0);
  const Model m(ModelSpec::mlp(1, {3}, Activation::tanh()));
  ActiveConfig cfg = small_config(4);
  cfg.global.max_evals = 2000;
  cfg.recert.max_evals = 2000;
  const FitReport r = fit_worst_case(bumpy, m, box, cfg);
  double grid = 0.0;
  for (int k = 0; k <= 100000; ++k) {
    const VectorXd x = VectorXd::Constant(1, -2.0 + 4.0 * k / 100000.0);
    grid = std::max(grid, abs_error(bumpy, m, r.theta_star.values, cfg.train, x));
  }
  CHECK(std::abs(r.recertified_wce - r.wce) <= 1e-3);
  CHECK(std::abs(grid - r.wce) <= 1e-3);
}

TEST_CASE("threshold has priority over the budget") {
  const ScalarField f = [](const VectorXd& x) { return 2.0 * x[0]; };
  ActiveConfig cfg = small_config(1);
  cfg.max_steps = 1;
  cfg.err_threshold = 1e-5;
  const FitReport r = fit_worst_case(f, Model(ModelSpec::linear(1)), Box::unit(1), cfg);
  CHECK(r.error_history.size() == 1);
  CHECK(r.stop_reason == StopReason::kThreshold);
}

TEST_CASE("determinism per seed") {
  const Box box = Box::uniform(1, -2.0, 2.0);
  const Model m(ModelSpec::mlp(1, {3}, Activation::tanh()));
  const FitReport a = fit_worst_case(bumpy, m, box, small_config(21));
  const FitReport b = fit_worst_case(bumpy, m, box, small_config(21));
  CHECK(a.theta_star.values == b.theta_star.values);
  CHECK(a.error_history == b.error_history);
  CHECK(a.dataset_final.xs == b.dataset_final.xs);
}

TEST_CASE("training that fails at every iteration is an error") {
  const Box box = Box::uniform(1, -1.0, 1.0);
  const ScalarField f = [](const VectorXd& x) { return x[0]; };
  ActiveConfig cfg = small_config(2);
  cfg.max_steps = 3;
  Dataset bad;
  bad.append(VectorXd::Constant(1, 0.5), std::numeric_limits<double>::infinity(), false);
  CHECK_THROWS_AS(fit_worst_case(f, Model(ModelSpec::linear(1)), box, cfg, bad), Error);
}

TEST_CASE("passive least-squares baseline") {
  const Box box = Box::uniform(1, -2.0, 2.0);
  const Model m(ModelSpec::mlp(1, {3}, Activation::tanh()));
  ActiveConfig cfg = small_config(8);
  const FitReport r = fit_passive_mse(bumpy, m, box, 18, cfg);
  CHECK(r.dataset_final.size() == 18);
  CHECK(r.wce > 0.0);
  for (Eigen::Index k = 0; k < r.dataset_final.size(); ++k)
    CHECK(abs_error(bumpy, m, r.theta_star.values, cfg.train, r.dataset_final.xs.col(k)) <= r.wce + 1e-12);
}

TEST_CASE("configuration validation") {
  ActiveConfig cfg;
  cfg.n_initial = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ActiveConfig{};
  cfg.err_threshold = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
