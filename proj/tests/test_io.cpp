#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "support.hpp"
#include "wcreg/error.hpp"
#include "wcreg/io.hpp"
#include "wcreg/problems.hpp"

using namespace wcreg;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t end = s.find("\r\n", pos);
    out.push_back(s.substr(pos, end - pos));
    pos = end + 2;
  }
  return out;
}

std::vector<std::string> split(const std::string& row) {
  std::vector<std::string> out;
  std::stringstream ss(row);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  if (!row.empty() && row.back() == ',') out.push_back("");
  return out;
}

}  // namespace

TEST_CASE("doubles round trip bit-exactly through strings") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::uint64_t> bits;
  int checked = 0;
  while (checked < 10000) {
    const std::uint64_t b = bits(rng);
    double v;
    std::memcpy(&v, &b, sizeof v);
    if (std::isnan(v)) continue;
    CHECK(same_bits(parse_double(format_double(v)), v));
    ++checked;
  }
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(std::isnan(parse_double("nan")));
  CHECK(parse_double("-inf") < 0.0);
  CHECK_THROWS_AS(parse_double("1.0x"), ConfigError);
  CHECK(number_from_json(number_json(-std::numeric_limits<double>::infinity())) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("parameter vectors and model specs round trip") {
  for (const auto& key : problem_keys()) {
    const Problem p = make_problem(key);
    CAPTURE(key);
    const Model model(p.family);
    const ParamVec theta = model.initial_param_vec(5);
    const ParamVec back = param_vec_from_json(Json::parse(to_json(theta).dump()));
    REQUIRE(back.values.size() == theta.values.size());
    for (Eigen::Index i = 0; i < theta.values.size(); ++i) CHECK(same_bits(back.values[i], theta.values[i]));
    CHECK(back.layout.total() == theta.layout.total());

    const ModelSpec spec = model_spec_from_json(Json::parse(to_json(p.family).dump()));
    CHECK(to_json(spec).dump() == to_json(p.family).dump());
    const Model rebuilt(spec);
    std::mt19937_64 rng(3);
    for (int k = 0; k < 20; ++k) {
      const VectorXd x = p.box.lower + (p.box.upper - p.box.lower).cwiseProduct(
                                           (testing::random_vector(rng, p.box.dim()).array() + 1.0).matrix() / 2.0);
      CHECK(same_bits(rebuilt.eval(back.values, x), model.eval(theta.values, x)));
    }
  }
}

TEST_CASE("mpQP and MPC descriptions round trip") {
  const MpcSpec spec = nonminphase_mpc(5, 0.5);
  const MpcSpec spec_back = mpc_spec_from_json(Json::parse(to_json(spec).dump()));
  CHECK(to_json(spec_back).dump() == to_json(spec).dump());
  CHECK(std::isinf(spec_back.u_max[0]));

  const MpQp qp = condense_mpc(spec);
  const MpQp qp_back = mpqp_from_json(Json::parse(to_json(qp).dump()));
  CHECK((qp_back.Q - qp.Q).norm() == 0.0);
  CHECK((qp_back.A - qp.A).norm() == 0.0);
  CHECK((qp_back.b - qp.b).norm() == 0.0);
  CHECK(qp_back.box.lower == qp.box.lower);

  Json bad = to_json(qp);
  bad["A"]["rows"] = 3;
  CHECK_THROWS_AS(mpqp_from_json(bad), ConfigError);
}

TEST_CASE("config overrides only touch present keys") {
  ActiveConfig c;
  const ActiveConfig d;
  apply_json(c, Json::parse(R"({"n_initial": 7, "train": {"gamma": 3}, "global": {"max_evals": 99}})"));
  CHECK(c.n_initial == 7);
  CHECK(c.train.gamma == 3.0);
  CHECK(c.global.max_evals == 99);
  CHECK(c.max_steps == d.max_steps);
  CHECK(c.recert.max_evals == d.recert.max_evals);
  ActiveConfig rejected = c;
  CHECK_THROWS_AS(apply_json(rejected, Json::parse(R"({"n_initial": -1})")), ConfigError);

  ActiveConfig e;
  apply_json(e, to_json(c));
  CHECK(to_json(e).dump() == to_json(c).dump());
}

TEST_CASE("csv quoting") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_field("two\nlines") == "\"two\nlines\"");
  CHECK(csv_row({"a", "b,c", ""}) == "a,\"b,c\",\r\n");
}

TEST_CASE("grid export matches direct evaluation") {
  const Problem p = make_problem("gaussian");
  const Model model(p.family);
  const ParamVec theta = model.initial_param_vec(1);
  const std::string csv = grid_csv(p.f, model, theta.values, p.box, 3);
  const auto rows = lines(csv);
  REQUIRE(rows.size() == 10);
  CHECK(rows[0] == "x1,x2,f,f_hat,err,lower,upper");
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto fields = split(rows[k]);
    REQUIRE(fields.size() == 7);
    const VectorXd x = (VectorXd(2) << parse_double(fields[0]), parse_double(fields[1])).finished();
    CHECK(same_bits(parse_double(fields[2]), p.f(x)));
    CHECK(same_bits(parse_double(fields[3]), model.eval(theta.values, x)));
    CHECK(fields[5].empty());
  }

  const BoundFn bounds = [](const VectorXd&) { return std::pair{-0.25, 0.5}; };
  const auto with_bounds = lines(grid_csv(p.f, model, theta.values, p.box, 2, bounds));
  REQUIRE(with_bounds.size() == 5);
  CHECK(split(with_bounds[1])[5] == "-0.25");
  CHECK(split(with_bounds[1])[6] == "0.5");

  CHECK_THROWS_AS(grid_csv(p.f, model, theta.values, p.box, 1), ConfigError);
  CHECK_THROWS_AS(grid_csv(p.f, model, theta.values, p.box, 4000), ConfigError);
}

TEST_CASE("history csv has one row per iteration") {
  FitReport r;
  r.iterations.resize(3);
  for (int i = 0; i < 3; ++i) {
    r.iterations[i].iteration = i;
    r.iterations[i].error = 0.5 / (i + 1);
  }
  const auto rows = lines(history_csv(r));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "iteration,n_samples,error,train_loss,direct_evals,failed,wall_seconds");
  CHECK(split(rows[2])[2] == "0.25");
}
