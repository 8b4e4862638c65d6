#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "support.hpp"
#include "wcreg/error.hpp"
#include "wcreg/loss.hpp"
#include "wcreg/math.hpp"

using namespace wcreg;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// A linear model held at zero predicts 0, so the residuals equal the targets.
struct ZeroPredictor {
  Model model{ModelSpec::linear(1)};
  VectorXd theta = VectorXd::Zero(2);

  Dataset data(const VectorXd& errors) const {
    Dataset d;
    d.xs = MatrixXd::Zero(1, errors.size());
    d.ys = errors;
    d.acquired.assign(errors.size(), false);
    return d;
  }
};

long double reference_linf(const VectorXd& e, long double gamma) {
  long double s = 0.0L;
  for (Eigen::Index k = 0; k < e.size(); ++k) s += std::exp(gamma * e[k]) + std::exp(-gamma * e[k]);
  return std::log(s) / gamma;
}

// Envelope whose output is the constant softplus(raw) + floor.
struct ConstantEnvelope {
  Model model{ModelSpec::envelope(1, {2}, Activation::tanh(), Activation::softplus())};
  VectorXd psi(double c) const {
    ParamVec p{VectorXd::Zero(model.num_params()), model.layout()};
    p.block("b_out")(0, 0) = softplus_inverse(c - Model::kEnvelopeFloor);
    return p.values;
  }
};

}  // namespace

TEST_CASE("smooth linf loss examples") {
  ZeroPredictor z;
  TrainConfig cfg;
  cfg.gamma = 10.0;
  CHECK(smooth_linf_loss(z.model, z.theta, z.data(VectorXd::Zero(1)), cfg).value ==
        doctest::Approx(0.1 * std::log(2.0)).epsilon(1e-15));
  CHECK(smooth_linf_loss(z.model, z.theta, z.data(VectorXd::Zero(1)), cfg).value == doctest::Approx(0.0693147).epsilon(1e-6));

  const VectorXd e = (VectorXd(2) << 0.5, -0.2).finished();
  const double v = smooth_linf_loss(z.model, z.theta, z.data(e), cfg).value;
  CHECK(std::abs(v - static_cast<double>(reference_linf(e, 10.0L))) < 1e-14);
  CHECK(std::abs(v - 0.50494) < 1e-5);
}

TEST_CASE("smooth linf loss sandwich and monotonicity in gamma") {
  ZeroPredictor z;
  std::mt19937_64 rng(17);
  for (int t = 0; t < 200; ++t) {
    const int N = 1 + static_cast<int>(rng() % 200);
    const VectorXd e = testing::random_vector(rng, N, -5.0, 5.0) * std::pow(10.0, -3.0 + (t % 5));
    const double m = e.cwiseAbs().maxCoeff();
    double previous = 1e300;
    for (double gamma : {1.0, 10.0, 100.0, 1000.0}) {
      TrainConfig cfg;
      cfg.gamma = gamma;
      const double v = smooth_linf_loss(z.model, z.theta, z.data(e), cfg).value;
      CHECK(std::isfinite(v));
      CHECK(v >= m * (1.0 - 1e-15));
      CHECK(v <= m + std::log(2.0 * N) / gamma + 1e-12 * (1.0 + m));
      CHECK(v <= previous + 1e-12 * (1.0 + m));
      previous = v;
    }
  }
}

TEST_CASE("smooth linf loss is overflow safe") {
  ZeroPredictor z;
  TrainConfig cfg;
  cfg.gamma = 1e4;
  const VectorXd e = (VectorXd(3) << 1e3, -2e3, 5.0).finished();
  const double v = smooth_linf_loss(z.model, z.theta, z.data(e), cfg).value;
  CHECK(v == doctest::Approx(2e3));
}

TEST_CASE("smooth linf loss with mse weight and regularization") {
  ZeroPredictor z;
  const VectorXd e = (VectorXd(3) << 0.3, -0.1, 0.2).finished();
  TrainConfig cfg;
  cfg.gamma = 5.0;
  cfg.nu = 0.25;
  cfg.l2_reg = 0.5;
  VectorXd theta = (VectorXd(2) << 0.0, 0.0).finished();
  const double base = static_cast<double>(reference_linf(e, 5.0L));
  CHECK(smooth_linf_loss(z.model, theta, z.data(e), cfg).value ==
        doctest::Approx(base + 0.25 * e.squaredNorm() / 3.0).epsilon(1e-13));

  // A bias b shifts every residual by -b and adds 0.5 b^2.
  theta[1] = 0.05;
  const VectorXd shifted = e.array() - 0.05;
  CHECK(smooth_linf_loss(z.model, theta, z.data(e), cfg).value ==
        doctest::Approx(static_cast<double>(reference_linf(shifted, 5.0L)) + 0.25 * shifted.squaredNorm() / 3.0 +
                        0.5 * 0.05 * 0.05)
            .epsilon(1e-13));
}

TEST_CASE("smooth linf loss gradient against central differences") {
  std::mt19937_64 rng(3);
  Model m(ModelSpec::mlp(2, {5, 3}, Activation::tanh(), true));
  for (int t = 0; t < 30; ++t) {
    Dataset d;
    d.xs = testing::random_matrix(rng, 2, 12);
    d.ys = testing::random_vector(rng, 12);
    d.acquired.assign(12, false);
    TrainConfig cfg;
    cfg.gamma = (t % 2) ? 10.0 : 50.0;
    cfg.nu = (t % 3) * 0.1;
    cfg.l2_reg = (t % 4) * 1e-3;
    if (t % 5 == 0) cfg.sign_eta = 3.0;
    const VectorXd theta = testing::random_vector(rng, m.num_params());
    const LossValue lv = smooth_linf_loss(m, theta, d, cfg);
    const VectorXd fd = testing::central_difference(
        [&](const VectorXd& th) { return smooth_linf_loss(m, th, d, cfg).value; }, theta);
    CHECK(testing::gradient_mismatch(lv.grad, fd) <= 1e-5);
  }
}

TEST_CASE("smooth linf loss errors") {
  ZeroPredictor z;
  Dataset empty;
  empty.xs = MatrixXd::Zero(1, 0);
  empty.ys = VectorXd::Zero(0);
  CHECK_THROWS_AS(smooth_linf_loss(z.model, z.theta, empty, TrainConfig{}), Error);

  TrainConfig bad;
  bad.gamma = 0.0;
  CHECK_THROWS_AS(smooth_linf_loss(z.model, z.theta, z.data(VectorXd::Zero(1)), bad), ConfigError);

  Dataset d = z.data(VectorXd::Zero(3));
  d.xs(0, 2) = std::numeric_limits<double>::infinity();
  VectorXd theta = VectorXd::Ones(2);
  try {
    smooth_linf_loss(z.model, theta, d, TrainConfig{});
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(e.where() == "sample 2");
  }
}

TEST_CASE("sign transform") {
  CHECK(sign_transform(0.0, 3.0) == 0.0);
  CHECK(std::abs(sign_transform(10.0, 10.0) - 1.0) < 1e-12);
  CHECK(sign_transform(0.1, 10.0) == doctest::Approx(0.761594).epsilon(1e-6));
  CHECK_THROWS_AS(sign_transform(1.0, 0.0), ConfigError);
}

TEST_CASE("symmetric envelope loss examples") {
  ConstantEnvelope ce;
  const int N = 7;
  const MatrixXd xs = MatrixXd::Zero(1, N);
  for (double c : {0.1, 0.5, 2.0}) {
    const double gamma = 10.0;
    const LossValue lv = envelope_loss_sym(ce.model, ce.psi(c), xs, VectorXd::Zero(N), gamma, EnvelopeMu::kIdentity, 0.0);
    CHECK(lv.value == doctest::Approx(c + std::log1p(N * std::exp(-gamma * c)) / gamma).epsilon(1e-12));
  }

  const double e1 = 0.37;
  const LossValue single =
      envelope_loss_sym(ce.model, ce.psi(e1), MatrixXd::Zero(1, 1), VectorXd::Constant(1, e1), 10.0, EnvelopeMu::kSquare, 0.0);
  CHECK(single.value == doctest::Approx(e1 * e1 + std::log(2.0) / 10.0).epsilon(1e-12));
}

TEST_CASE("symmetric envelope penalty tends to the maximum violation") {
  Model env(ModelSpec::envelope(2, {6}, Activation::tanh(), Activation::softplus()));
  std::mt19937_64 rng(29);
  const double gamma = 1e3;
  for (int t = 0; t < 50; ++t) {
    const int N = 20;
    const MatrixXd xs = testing::random_matrix(rng, 2, N);
    const VectorXd errors = testing::random_vector(rng, N, -2.0, 2.0);
    const VectorXd psi = testing::random_vector(rng, env.num_params());
    const VectorXd eps = env.eval_batch(psi, xs);
    const double mu_part = eps.sum() / N;
    const double penalty = envelope_loss_sym(env, psi, xs, errors, gamma, EnvelopeMu::kIdentity, 0.0).value - mu_part;
    const double target = std::max(0.0, (errors.cwiseAbs() - eps).maxCoeff());
    CHECK(penalty >= -1e-12);
    CHECK(penalty >= target - 1e-12);
    CHECK(penalty <= target + std::log(1.0 + N) / gamma + 1e-12);
  }
}

TEST_CASE("envelope loss gradients against central differences") {
  std::mt19937_64 rng(31);
  Model env(ModelSpec::envelope(2, {5, 3}, Activation::tanh(), Activation::softplus()));
  Model env_l(ModelSpec::envelope(2, {4}, Activation::leaky_relu(0.1), Activation::sigmoid()));
  for (int t = 0; t < 20; ++t) {
    const MatrixXd xs = testing::random_matrix(rng, 2, 15);
    const VectorXd errors = testing::random_vector(rng, 15, -1.0, 1.0);
    const VectorXd psi = testing::random_vector(rng, env.num_params());
    const VectorXd psi_l = testing::random_vector(rng, env_l.num_params());
    const EnvelopeMu mu = (t % 2) ? EnvelopeMu::kIdentity : EnvelopeMu::kSquare;
    const double rho = (t % 3) * 1e-3;

    const LossValue sym = envelope_loss_sym(env, psi, xs, errors, 10.0, mu, rho);
    const VectorXd fd = testing::central_difference(
        [&](const VectorXd& p) { return envelope_loss_sym(env, p, xs, errors, 10.0, mu, rho).value; }, psi);
    CHECK(testing::gradient_mismatch(sym.grad, fd) <= 1e-5);

    const bool additive = t % 4 < 2;
    const AsymLossValue asym = envelope_loss_asym(env, psi, env_l, psi_l, xs, errors, 10.0, mu, rho, additive);
    const VectorXd fd_u = testing::central_difference(
        [&](const VectorXd& p) {
          return envelope_loss_asym(env, p, env_l, psi_l, xs, errors, 10.0, mu, rho, additive).value;
        },
        psi);
    const VectorXd fd_l = testing::central_difference(
        [&](const VectorXd& p) {
          return envelope_loss_asym(env, psi, env_l, p, xs, errors, 10.0, mu, rho, additive).value;
        },
        psi_l);
    CHECK(testing::gradient_mismatch(asym.grad_upper, fd_u) <= 1e-5);
    CHECK(testing::gradient_mismatch(asym.grad_lower, fd_l) <= 1e-5);
  }
}

TEST_CASE("asymmetric envelope loss matches term-by-term summation") {
  std::mt19937_64 rng(37);
  Model env_u(ModelSpec::envelope(2, {4}, Activation::tanh(), Activation::softplus()));
  Model env_l(ModelSpec::envelope(2, {3}, Activation::tanh(), Activation::relu()));
  for (int t = 0; t < 30; ++t) {
    const int N = 25;
    const MatrixXd xs = testing::random_matrix(rng, 2, N);
    const VectorXd errors = testing::random_vector(rng, N, -1.5, 1.5);
    const VectorXd pu = testing::random_vector(rng, env_u.num_params());
    const VectorXd pl = testing::random_vector(rng, env_l.num_params());
    const double gamma = 20.0, rho = 1e-2;
    const VectorXd eu = env_u.eval_batch(pu, xs), el = env_l.eval_batch(pl, xs);
    for (bool additive : {false, true}) {
      long double sum = 1.0L, mu_sum = 0.0L;
      for (int k = 0; k < N; ++k) {
        sum += std::exp(static_cast<long double>(gamma) * (errors[k] - eu[k]));
        sum += std::exp(static_cast<long double>(gamma) * (-errors[k] - el[k]));
        const long double a = eu[k], b = el[k];
        mu_sum += additive ? a * a + b * b : (a + b) * (a + b);
      }
      const long double ref = rho * (pu.squaredNorm() + pl.squaredNorm()) + mu_sum / N + std::log(sum) / gamma;
      const double v = envelope_loss_asym(env_u, pu, env_l, pl, xs, errors, gamma, EnvelopeMu::kSquare, rho, additive).value;
      CHECK(std::abs(static_cast<long double>(v) - ref) < 1e-12L);
    }
  }
}

TEST_CASE("asymmetric envelope loss symmetry and decoupling") {
  std::mt19937_64 rng(41);
  Model env(ModelSpec::envelope(1, {4}, Activation::tanh(), Activation::softplus()));
  for (int t = 0; t < 30; ++t) {
    const int N = 10;
    const MatrixXd xs = testing::random_matrix(rng, 1, N);
    const VectorXd e = testing::random_vector(rng, N);
    const VectorXd a = testing::random_vector(rng, env.num_params());
    const VectorXd b = testing::random_vector(rng, env.num_params());

    // Swapping the envelopes and negating the errors leaves the objective unchanged.
    const AsymLossValue fwd = envelope_loss_asym(env, a, env, b, xs, e, 10.0, EnvelopeMu::kIdentity, 1e-3);
    const AsymLossValue mir = envelope_loss_asym(env, b, env, a, xs, -e, 10.0, EnvelopeMu::kIdentity, 1e-3);
    CHECK(fwd.value == doctest::Approx(mir.value).epsilon(1e-14));
    CHECK((fwd.grad_upper - mir.grad_lower).norm() <= 1e-12 * (1.0 + fwd.grad_upper.norm()));

    // With an additive mu the joint penalty is within log(2)/gamma of the larger one-sided penalty.
    const double gamma = 10.0;
    const VectorXd eu = env.eval_batch(a, xs), el = env.eval_batch(b, xs);
    double su = 1.0, sl = 1.0;
    for (int k = 0; k < N; ++k) {
      su += std::exp(gamma * (e[k] - eu[k]));
      sl += std::exp(gamma * (-e[k] - el[k]));
    }
    const double mu_part = (eu.sum() + el.sum()) / N;
    const double joint =
        envelope_loss_asym(env, a, env, b, xs, e, gamma, EnvelopeMu::kIdentity, 0.0, true).value - mu_part;
    const double larger = std::max(std::log(su), std::log(sl)) / gamma;
    CHECK(joint >= larger - 1e-12);
    CHECK(joint <= larger + std::log(2.0) / gamma + 1e-12);
  }

  // Errors all non-positive with a large upper envelope: upper terms vanish.
  ConstantEnvelope ce;
  const int N = 5;
  const MatrixXd xs = MatrixXd::Zero(1, N);
  const VectorXd e = -VectorXd::LinSpaced(N, 0.0, 1.0);
  const AsymLossValue big =
      envelope_loss_asym(ce.model, ce.psi(50.0), ce.model, ce.psi(1.5), xs, e, 10.0, EnvelopeMu::kIdentity, 0.0, true);
  const AsymLossValue huge =
      envelope_loss_asym(ce.model, ce.psi(80.0), ce.model, ce.psi(1.5), xs, e, 10.0, EnvelopeMu::kIdentity, 0.0, true);
  CHECK(big.value - 50.0 == doctest::Approx(huge.value - 80.0).epsilon(1e-12));
}
