#include <doctest.h>

#include <cmath>
#include <optional>

#include "qp_oracle.hpp"
#include "support.hpp"
#include "wcreg/error.hpp"
#include "wcreg/qp.hpp"

using namespace wcreg;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MpcSpec random_mpc(std::mt19937_64& rng, Index nxi, Index nu, Index nt, int N, int Nu, int Nc) {
  MpcSpec s;
  s.A = testing::random_matrix(rng, nxi, nxi, -0.6, 0.6);
  s.B = testing::random_matrix(rng, nxi, nu);
  s.C = testing::random_matrix(rng, nt, nxi);
  s.N = N;
  s.Nu = Nu;
  s.Nc = Nc;
  const MatrixXd Wt = testing::random_matrix(rng, nt, nt);
  s.Q_tau = Wt.transpose() * Wt;
  const MatrixXd Wu = testing::random_matrix(rng, nu, nu);
  s.Q_du = Wu.transpose() * Wu + 0.1 * MatrixXd::Identity(nu, nu);
  s.rho2 = 7.0;
  s.rho1 = 0.3;
  s.u_min = VectorXd::Constant(nu, -1.5);
  s.u_max = VectorXd::Constant(nu, 1.2);
  s.du_min = VectorXd::Constant(nu, -0.4);
  s.du_max = VectorXd::Constant(nu, 0.5);
  s.tau_min = VectorXd::Constant(nt, -1.0);
  s.tau_max = VectorXd::Constant(nt, 0.8);
  s.V_min = VectorXd::Constant(nt, 1.0);
  s.V_max = VectorXd::Constant(nt, 0.5);
  return s;
}

}  // namespace

TEST_CASE("qp examples") {
  SUBCASE("no active constraints") {
    const MatrixXd Q = (MatrixXd(2, 2) << 2.0, 0.5, 0.5, 1.0).finished();
    const VectorXd c = (VectorXd(2) << 1.0, -1.0).finished();
    const MatrixXd A = (MatrixXd(1, 2) << 1.0, 1.0).finished();
    const QpSolution s = solve_qp(Q, c, A, VectorXd::Constant(1, 100.0));
    CHECK(s.active.empty());
    CHECK((s.z + Q.llt().solve(c)).norm() <= 1e-14);
    CHECK(s.kkt_residual <= 1e-12);
  }
  SUBCASE("single bound") {
    const QpSolution s = solve_qp(MatrixXd::Identity(1, 1), VectorXd::Constant(1, -1.0), MatrixXd::Identity(1, 1),
                                  VectorXd::Constant(1, 0.5));
    CHECK(s.z[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(s.lambda[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(s.active == std::vector<Index>{0});
  }
  SUBCASE("infeasible") {
    const MatrixXd A = (MatrixXd(2, 1) << 1.0, -1.0).finished();
    const QpSolution s = solve_qp(MatrixXd::Identity(1, 1), VectorXd::Zero(1), A, (VectorXd(2) << -1.0, -1.0).finished());
    CHECK(s.status == QpStatus::kInfeasible);
  }
  SUBCASE("duplicate rows") {
    const MatrixXd A = (MatrixXd(3, 2) << 1.0, 0.0, 1.0, 0.0, 0.0, 1.0).finished();
    const QpSolution s =
        solve_qp(MatrixXd::Identity(2, 2), (VectorXd(2) << -2.0, -2.0).finished(), A, VectorXd::Constant(3, 1.0));
    CHECK((s.z - VectorXd::Constant(2, 1.0)).norm() <= 1e-12);
    CHECK(s.lambda[0] + s.lambda[1] == doctest::Approx(1.0));
  }
  SUBCASE("rejected input") {
    CHECK_THROWS_AS(solve_qp(-MatrixXd::Identity(1, 1), VectorXd::Zero(1), MatrixXd(0, 1), VectorXd(0)),
                    NumericError);
    CHECK_THROWS_AS(solve_qp(MatrixXd::Identity(2, 2), VectorXd::Zero(1), MatrixXd(0, 2), VectorXd(0)),
                    DimensionError);
  }
}

TEST_CASE("random QPs match active-set enumeration") {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> dn(1, 6), dm(0, 8);
  int feasible = 0, agreeing_sets = 0;
  for (int t = 0; t < 500; ++t) {
    const Index n = dn(rng), m = dm(rng);
    const MatrixXd W = testing::random_matrix(rng, n, n);
    const MatrixXd Q = W.transpose() * W + 0.1 * MatrixXd::Identity(n, n);
    const VectorXd c = testing::random_vector(rng, n, -2.0, 2.0);
    const MatrixXd A = testing::random_matrix(rng, m, n);
    VectorXd b;
    if (t % 5 == 4) {
      b = testing::random_vector(rng, m, -1.0, 0.2);
    } else {
      b = A * testing::random_vector(rng, n) + testing::random_vector(rng, m, 0.0, 0.5);
    }
    std::vector<Index> bf_active;
    const auto oracle = testing::brute_force_qp(Q, c, A, b, &bf_active);
    const QpSolution s = solve_qp(Q, c, A, b);
    REQUIRE((s.status == QpStatus::kOptimal) == oracle.has_value());
    if (!oracle) continue;
    ++feasible;
    CHECK((s.z - *oracle).norm() <= 1e-7 * (1.0 + oracle->norm()));
    CHECK(s.kkt_residual <= 1e-8);
    std::sort(bf_active.begin(), bf_active.end());
    if (s.active == bf_active) ++agreeing_sets;
  }
  CHECK(feasible >= 400);
  CHECK(agreeing_sets == feasible);
}

TEST_CASE("critical region of the unconstrained solution") {
  const Box box = Box::uniform(2, -2.0, 2.0);
  const MpQp qp = random_mpqp(2, 10, 30, -1.0, 1.0, box, 7);
  CHECK(qp.n_constraints() == 50);
  const CriticalRegion cr = cr0(qp);
  const UnconstrainedLaw w = unconstrained_law(qp);

  std::mt19937_64 rng(3);
  int inside = 0, outside = 0;
  for (int t = 0; t < 200000 && (inside < 1000 || outside < 1000); ++t) {
    const VectorXd x = testing::random_vector(rng, 2, -2.0, 2.0);
    const QpSolution s = solve_qp(qp, x);
    REQUIRE(s.status == QpStatus::kOptimal);
    CHECK(cr.contains(x) == cr.contains(x, 1e-12));
    const VectorXd z_unc = -qp.Q.llt().solve(qp.F * x + qp.f);
    if (cr.contains(x)) {
      if (inside++ >= 1000) continue;
      CHECK(s.active.empty());
      CHECK(std::abs(s.z[0] - w(x)) <= 1e-8);
      CHECK(std::abs(unconstrained_row(qp, x) - z_unc[0]) <= 1e-12);
    } else {
      if (outside++ >= 1000) continue;
      CHECK(((qp.A * z_unc - qp.B * x - qp.b).array() > 0.0).any());
      CHECK_FALSE(s.active.empty());
    }
    CHECK(cr.contains(x) == ((cr.H_min * x - cr.K_min).array() <= 1e-12).all());
  }
  CHECK(inside >= 1000);
  CHECK(outside >= 1000);

  // Minimality against an independent polygon-clipping oracle.
  const double R = 1e4;
  const double full = testing::polygon_area(cr.H, cr.K, R);
  CHECK(testing::polygon_area(cr.H_min, cr.K_min, R) == doctest::Approx(full).epsilon(1e-9));
  for (Index i = 0; i < cr.H_min.rows(); ++i) {
    MatrixXd H(cr.H_min.rows() - 1, 2);
    VectorXd K(cr.H_min.rows() - 1);
    for (Index j = 0, r = 0; j < cr.H_min.rows(); ++j)
      if (j != i) {
        H.row(r) = cr.H_min.row(j);
        K[r++] = cr.K_min[j];
      }
    CHECK(testing::polygon_area(H, K, R) > full * (1.0 + 1e-9));
  }
}

TEST_CASE("critical region trivial case") {
  MpQp qp;
  qp.Q = MatrixXd::Identity(2, 2);
  qp.F = MatrixXd::Identity(2, 2);
  qp.f = VectorXd::Zero(2);
  qp.A = MatrixXd::Identity(2, 2);
  qp.B = MatrixXd::Zero(2, 2);
  for (double b0 : {0.5, -0.5}) {
    qp.b = (VectorXd(2) << b0, 1.0).finished();
    CHECK(unconstrained_row(qp, VectorXd::Zero(2)) == 0.0);
    CHECK(cr0(qp).contains(VectorXd::Zero(2)) == (b0 >= 0.0));
  }
}

TEST_CASE("condensing a one-step scalar problem") {
  MpcSpec s;
  s.A = MatrixXd::Constant(1, 1, 0.9);
  s.B = MatrixXd::Constant(1, 1, 0.5);
  s.C = MatrixXd::Constant(1, 1, 2.0);
  s.Q_tau = MatrixXd::Constant(1, 1, 1.0);
  s.Q_du = MatrixXd::Constant(1, 1, 0.1);
  s.rho2 = 3.0;
  s.rho1 = 0.5;
  s.u_min = VectorXd::Constant(1, -1.0);
  s.u_max = VectorXd::Constant(1, 2.0);
  s.du_min = VectorXd::Constant(1, -0.3);
  s.du_max = VectorXd::Constant(1, 0.4);
  s.tau_min = VectorXd::Constant(1, -5.0);
  s.tau_max = VectorXd::Constant(1, 5.0);
  s.V_min = VectorXd::Constant(1, 1.0);
  s.V_max = VectorXd::Constant(1, 1.0);
  const MpQp qp = condense_mpc(s);

  // Cost (c(a xi + b u0) - r)^2 + 0.1 (u0 - u_prev)^2 + 3 zeta^2 + 0.5 zeta, worked out by hand.
  const MatrixXd Q = (MatrixXd(2, 2) << 2.2, 0.0, 0.0, 6.0).finished();
  const MatrixXd F = (MatrixXd(2, 3) << 3.6, -2.0, -0.2, 0.0, 0.0, 0.0).finished();
  const VectorXd f = (VectorXd(2) << 0.0, 0.5).finished();
  const MatrixXd Y = (MatrixXd(3, 3) << 3.24, -1.8, 0.0, -1.8, 1.0, 0.0, 0.0, 0.0, 0.1).finished();
  CHECK((qp.Q - Q).norm() <= 1e-14);
  CHECK((qp.F - F).norm() <= 1e-14);
  CHECK((qp.f - f).norm() <= 1e-14);
  CHECK((qp.Y - Y).norm() <= 1e-14);

  const MatrixXd A = (MatrixXd(7, 2) << 1, 0, -1, 0, 1, 0, -1, 0, 1, -1, -1, -1, 0, -1).finished();
  const MatrixXd B = (MatrixXd(7, 3) << 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, -1, -1.8, 0, 0, 1.8, 0, 0, 0, 0, 0).finished();
  const VectorXd b = (VectorXd(7) << 2.0, 1.0, 0.4, 0.3, 5.0, 5.0, 0.0).finished();
  CHECK((qp.A - A).norm() <= 1e-14);
  CHECK((qp.B - B).norm() <= 1e-14);
  CHECK((qp.b - b).norm() <= 1e-14);
}

TEST_CASE("condensed problem agrees with stage-wise simulation") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    const Index nxi = 1 + t % 3, nu = 1 + t % 2, nt = 1 + (t / 2) % 2;
    const int N = 3 + t % 4, Nu = 1 + t % N, Nc = 1 + (t * 7) % N;
    const MpcSpec s = random_mpc(rng, nxi, nu, nt, N, Nu, Nc);
    const MpQp qp = condense_mpc(s);
    CHECK(qp.n_z() == Nu * nu + 1);
    CHECK(qp.n_constraints() == 4 * Nu * nu + 2 * Nc * nt + 1);
    for (int k = 0; k < 50; ++k) {
      VectorXd z = testing::random_vector(rng, qp.n_z(), -2.0, 2.0);
      if (k % 2) z[z.size() - 1] = std::abs(z[z.size() - 1]);
      const VectorXd x = testing::random_vector(rng, s.n_x(), -2.0, 2.0);
      const double condensed = 0.5 * z.dot(qp.Q * z) + (qp.F * x + qp.f).dot(z) + x.dot(qp.Y * x);
      const double simulated = mpc_cost(s, z, x);
      CHECK(std::abs(condensed - simulated) <= 1e-9 * (1.0 + std::abs(simulated)));
      const double viol = (qp.A * z - qp.B * x - qp.b).maxCoeff();
      CHECK(std::abs(viol - mpc_max_violation(s, z, x)) <= 1e-9 * (1.0 + std::abs(viol)));
      CHECK((viol <= 0.0) == (mpc_max_violation(s, z, x) <= 0.0));
    }
  }
}

TEST_CASE("slack regularization and skipped bounds") {
  std::mt19937_64 rng(2);
  MpcSpec s = random_mpc(rng, 2, 1, 1, 4, 2, 3);
  s.rho2 = 0.0;
  s.u_min[0] = -std::numeric_limits<double>::infinity();
  s.u_max[0] = std::numeric_limits<double>::infinity();
  const MpQp qp = condense_mpc(s);
  CHECK(qp.Q(qp.n_z() - 1, qp.n_z() - 1) == kSlackRegularization);
  CHECK(qp.n_constraints() == 2 * 2 + 2 * 3 + 1);

  s.N = 1;
  CHECK_THROWS_AS(condense_mpc(s), ConfigError);
}

TEST_CASE("zero-order hold") {
  MatrixXd Ad, Bd;
  zoh_discretize(MatrixXd::Constant(1, 1, -0.7), MatrixXd::Constant(1, 1, 2.0), 0.5, Ad, Bd);
  CHECK(Ad(0, 0) == doctest::Approx(std::exp(-0.35)).epsilon(1e-14));
  CHECK(Bd(0, 0) == doctest::Approx((std::exp(-0.35) - 1.0) / -0.7 * 2.0).epsilon(1e-14));

  // Double integrator: Ad = [1 T; 0 1], Bd = [T^2/2; T].
  const MatrixXd Ac = (MatrixXd(2, 2) << 0, 1, 0, 0).finished();
  zoh_discretize(Ac, (MatrixXd(2, 1) << 0, 1).finished(), 0.3, Ad, Bd);
  CHECK((Ad - (MatrixXd(2, 2) << 1, 0.3, 0, 1).finished()).norm() <= 1e-14);
  CHECK((Bd - (MatrixXd(2, 1) << 0.045, 0.3).finished()).norm() <= 1e-14);
}

TEST_CASE("gated model reproduces the unconstrained law on CR0") {
  const Box box = Box::uniform(2, -2.0, 2.0);
  const MpQp qp = random_mpqp(2, 10, 30, -1.0, 1.0, box, 11);
  OutputLimits lim;
  lim.y_min = -1.0;
  lim.y_max = 1.0;
  const ModelSpec spec = mpc_gated_model(qp, ModelSpec::mlp(2, {5, 5}, Activation::relu(), true), lim);
  const Model m(spec);
  const CriticalRegion cr = cr0(qp);
  std::mt19937_64 rng(4);
  const VectorXd theta = m.initial_params(rng);

  int checked = 0;
  for (int t = 0; t < 100000 && checked < 1000; ++t) {
    const VectorXd x = testing::random_vector(rng, 2, -2.0, 2.0);
    if (!cr.contains(x, -1e-9)) continue;
    ++checked;
    CHECK(std::abs(m.eval(theta, x) - solve_qp(qp, x).z[0]) <= 1e-9);
  }
  CHECK(checked == 1000);

  // Far outside CR0 the gate is closed and the inner output is clamped.
  const MpQp simple = [] {
    MpQp p;
    p.Q = MatrixXd::Identity(1, 1);
    p.F = MatrixXd::Constant(1, 1, -1.0);
    p.f = VectorXd::Zero(1);
    p.A = MatrixXd::Constant(1, 1, 1.0);
    p.B = MatrixXd::Zero(1, 1);
    p.b = VectorXd::Constant(1, 1.0);
    return p;
  }();
  const Model lin(mpc_gated_model(simple, ModelSpec::linear(1), lim));
  VectorXd th = VectorXd::Zero(lin.num_params());
  th[lin.layout().at("b_out").offset] = 100.0;
  CHECK(lin.eval(th, VectorXd::Constant(1, 0.5)) == 0.5);
  CHECK(lin.eval(th, VectorXd::Constant(1, 50.0)) == 1.0);
  th[lin.layout().at("b_out").offset] = -100.0;
  CHECK(lin.eval(th, VectorXd::Constant(1, 50.0)) == -1.0);
}

TEST_CASE("closed-loop simulation") {
  MpcSpec s;
  s.A = (MatrixXd(2, 2) << 0.5, 0.1, 0.0, 0.7).finished();
  s.B = (MatrixXd(2, 1) << 0.0, 1.0).finished();
  s.C = (MatrixXd(1, 2) << 1.0, 0.0).finished();
  const Controller zero = [](const VectorXd&) { return VectorXd::Zero(1); };
  const Reference ref = [](int) { return VectorXd::Zero(1); };
  const Trajectory tr = simulate_closed_loop(s, zero, VectorXd::Constant(2, 1.0), ref, 30, VectorXd::Zero(1));
  CHECK(tr.xi.rows() == 31);
  CHECK(tr.xi.row(30).norm() < 1e-3 * tr.xi.row(0).norm());
  for (int t = 1; t <= 30; ++t) CHECK(tr.xi.row(t).norm() < tr.xi.row(t - 1).norm());

  const Controller bad = [](const VectorXd&) { return VectorXd::Constant(1, std::nan("")); };
  CHECK_THROWS_AS(simulate_closed_loop(s, bad, VectorXd::Zero(2), ref, 3, VectorXd::Zero(1)), NumericError);
}
