#include <doctest.h>

#include <cmath>

#include "wcreg/error.hpp"
#include "wcreg/problems.hpp"

using namespace wcreg;
using Eigen::VectorXd;

TEST_CASE("registry entries") {
  for (const auto& key : problem_keys()) {
    const Problem p = make_problem(key);
    CHECK(p.key == key);
    CHECK(p.box.dim() == p.family.n_inputs);
    CHECK_FALSE(p.description.empty());
    CHECK_NOTHROW(p.active.validate());
    if (p.kind != ProblemKind::kSystemId) CHECK(std::isfinite(p.f(p.box.center())));
  }
  CHECK_THROWS_AS(make_problem("nope"), ConfigError);
}

TEST_CASE("benchmark functions") {
  for (double x : {-10.0, -3.3, 0.0, 0.7, 9.5}) {
    const long double xl = x;
    const long double expected = (std::sin(xl - xl * xl / 10) + std::pow(xl / 10, 3) - 4 * xl / 10) *
                                 std::exp(-xl) / (1 + std::exp(-xl));
    CHECK(scalar_example(VectorXd::Constant(1, x)) == doctest::Approx(static_cast<double>(expected)).epsilon(1e-14));
  }
  CHECK(gaussian_bump(VectorXd::Constant(2, 0.5)) == 1.0);
  CHECK(nonconvex_set(VectorXd::Zero(2)) == -1.0);
}

TEST_CASE("MPC benchmark dimensions and step tracking") {
  const MpcSpec spec = nonminphase_mpc(20, 0.5);
  const MpQp qp = condense_mpc(spec);
  CHECK(qp.n_x() == 4);
  CHECK(qp.n_z() == 21);
  // 40 rate rows, 40 softened output rows and zeta >= 0.
  CHECK(qp.n_constraints() == 81);

  // Transfer function check: the discrete DC gain equals G(0) = -0.5.
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
  CHECK((spec.C * (I - spec.A).inverse() * spec.B)(0, 0) == doctest::Approx(-0.5).epsilon(1e-12));

  const Trajectory tr = simulate_closed_loop(
      spec, exact_mpc_controller(qp), VectorXd::Zero(2), [](int) { return VectorXd::Constant(1, 0.5); }, 100,
      VectorXd::Zero(1));
  CHECK(std::abs(tr.u(99, 0) - tr.u(98, 0)) <= 1e-6);
  CHECK(std::abs(tr.tau(100, 0) - 0.5) <= 1e-4);
  for (int t = 1; t < 100; ++t) CHECK(std::abs(tr.u(t, 0) - tr.u(t - 1, 0)) <= 0.5 + 1e-9);
}

TEST_CASE("random mpQP benchmark") {
  const Problem p = make_problem("random-mpqp");
  REQUIRE(p.qp);
  CHECK(p.qp->n_z() == 10);
  CHECK(p.qp->n_constraints() == 50);
  const VectorXd x = (VectorXd(2) << 0.3, -1.2).finished();
  CHECK(p.f(x) == solve_qp(*p.qp, x).z[0]);
  const Model m(p.family);
  CHECK(m.layout().contains("beta_raw"));
}
