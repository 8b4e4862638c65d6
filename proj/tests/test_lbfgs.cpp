#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "wcreg/error.hpp"
#include "wcreg/lbfgs.hpp"
#include "wcreg/math.hpp"

using namespace wcreg;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double rosenbrock(const VectorXd& x, VectorXd& g) {
  const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
  g[0] = -2.0 * a - 400.0 * x[0] * b;
  g[1] = 200.0 * b;
  return a * a + 100.0 * b * b;
}

// (1/gamma) log(e^{gamma(t-3)} + e^{-gamma(t-3)}), a smoothed |t - 3|.
double smooth_abs(const VectorXd& x, VectorXd& g) {
  const double gamma = 50.0, d = x[0] - 3.0;
  Eigen::Array2d z(gamma * d, -gamma * d);
  Eigen::ArrayXd w;
  const double v = log_sum_exp(Eigen::ArrayXd(z), w) / gamma;
  g[0] = w[0] - w[1];
  return v;
}

// Tilted double well with the global basin near t = -1.
double double_well(const VectorXd& x, VectorXd& g) {
  const double t = x[0];
  g[0] = 4.0 * t * (t * t - 1.0) + 0.3;
  return (t * t - 1.0) * (t * t - 1.0) + 0.3 * t;
}

}  // namespace

TEST_CASE("convex quadratic reaches the origin") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + t % 9;
    const MatrixXd R = testing::random_matrix(rng, n, n);
    const MatrixXd H = R * R.transpose() + 0.1 * MatrixXd::Identity(n, n);
    const Objective q = [&](const VectorXd& x, VectorXd& g) {
      g = H * x;
      return 0.5 * x.dot(H * x);
    };
    LbfgsConfig cfg;
    cfg.grad_tol = 1e-12;
    const LbfgsResult r = minimize(q, testing::random_vector(rng, n, -5, 5), cfg);
    CHECK(r.x.norm() < 1e-8);
    CHECK(r.status == LbfgsStatus::kConverged);
  }
}

TEST_CASE("rosenbrock from the classical start") {
  LbfgsConfig cfg;
  cfg.grad_tol = 1e-10;
  const LbfgsResult r = minimize(rosenbrock, (VectorXd(2) << -1.2, 1.0).finished(), cfg);
  CHECK((r.x - VectorXd::Ones(2)).norm() < 1e-6);
}

TEST_CASE("smoothed absolute value agrees with a grid oracle") {
  double best_t = 0.0, best_v = 1e300;
  VectorXd g(1);
  for (int k = 0; k <= 100000; ++k) {
    const double t = 10.0 * k / 100000.0;
    const double v = smooth_abs(VectorXd::Constant(1, t), g);
    if (v < best_v) best_v = v, best_t = t;
  }
  const LbfgsResult r = minimize(smooth_abs, VectorXd::Constant(1, 8.0), LbfgsConfig{});
  CHECK(std::abs(r.x[0] - best_t) < 1e-3);
  CHECK(std::abs(r.x[0] - 3.0) < 1e-3);
}

TEST_CASE("accepted steps are monotone and satisfy strong Wolfe") {
  std::mt19937_64 rng(7);
  LbfgsConfig cfg;
  cfg.record_trace = true;
  const Objective f = [](const VectorXd& x, VectorXd& g) {
    double v = 0.0;
    g.setZero();
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
      const double a = 1.0 - x[i], b = x[i + 1] - x[i] * x[i];
      v += a * a + 100.0 * b * b;
      g[i] += -2.0 * a - 400.0 * x[i] * b;
      g[i + 1] += 200.0 * b;
    }
    return v;
  };
  for (int t = 0; t < 10; ++t) {
    const LbfgsResult r = minimize(f, testing::random_vector(rng, 6, -2, 2), cfg);
    CHECK(r.values.size() >= 1);
    for (std::size_t i = 1; i < r.values.size(); ++i) CHECK(r.values[i] <= r.values[i - 1]);
    CHECK(r.value <= r.values.front());
    for (const auto& s : r.trace) {
      CHECK(s.dphi0 < 0.0);
      CHECK(s.phi <= s.phi0 + cfg.c1 * s.alpha * s.dphi0 + 1e-12 * std::abs(s.phi0));
      CHECK(std::abs(s.dphi) <= cfg.c2 * std::abs(s.dphi0) + 1e-12);
    }
  }
}

TEST_CASE("non-finite start is rejected") {
  const Objective f = [](const VectorXd& x, VectorXd& g) {
    g.setZero();
    return std::log(x[0]);
  };
  CHECK_THROWS_AS(minimize(f, VectorXd::Constant(1, -1.0), LbfgsConfig{}), NumericError);
}

TEST_CASE("invalid configuration") {
  LbfgsConfig cfg;
  cfg.c1 = 0.95;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = LbfgsConfig{};
  cfg.memory = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("multistart") {
  const InitSampler sampler = [](int, std::mt19937_64& rng) {
    return VectorXd::Constant(1, std::uniform_real_distribution<double>(-2.0, 2.0)(rng));
  };

  SUBCASE("single start equals minimize") {
    LbfgsConfig cfg;
    cfg.n_starts = 1;
    cfg.seed = 99;
    const LbfgsResult multi = multistart_minimize(rosenbrock, [](int, std::mt19937_64&) {
      return (VectorXd(2) << -1.2, 1.0).finished();
    }, cfg);
    const LbfgsResult single = minimize(rosenbrock, (VectorXd(2) << -1.2, 1.0).finished(), cfg);
    CHECK(multi.x == single.x);
    CHECK(multi.value == single.value);
  }

  SUBCASE("double well global basin") {
    double best_t = 0.0, best_v = 1e300;
    VectorXd g(1);
    for (int k = 0; k <= 400000; ++k) {
      const double t = -2.0 + 4.0 * k / 400000.0;
      const double v = double_well(VectorXd::Constant(1, t), g);
      if (v < best_v) best_v = v, best_t = t;
    }
    LbfgsConfig cfg;
    cfg.n_starts = 10;
    cfg.seed = 5;
    const LbfgsResult r = multistart_minimize(double_well, sampler, cfg);
    CHECK(std::abs(r.x[0] - best_t) < 1e-4);
    CHECK(r.value <= best_v + 1e-10);
  }

  SUBCASE("bitwise determinism") {
    LbfgsConfig cfg;
    cfg.n_starts = 8;
    cfg.seed = 12345;
    const LbfgsResult a = multistart_minimize(double_well, sampler, cfg);
    const LbfgsResult b = multistart_minimize(double_well, sampler, cfg);
    CHECK(a.x == b.x);
    CHECK(a.value == b.value);
    CHECK(a.start_index == b.start_index);
  }

  SUBCASE("all starts failing aggregates the errors") {
    LbfgsConfig cfg;
    cfg.n_starts = 3;
    const Objective bad = [](const VectorXd&, VectorXd& g) {
      g.setZero();
      return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS_AS(multistart_minimize(bad, sampler, cfg), Error);
  }
}
