#pragma once

#include <Eigen/Dense>
#include <functional>
#include <json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wcreg/bounds.hpp"
#include "wcreg/constraints.hpp"
#include "wcreg/dynamics.hpp"
#include "wcreg/qp.hpp"

namespace wcreg {

/// Insertion-ordered so that documents are byte-identical across runs.
using Json = nlohmann::ordered_json;

/// Shortest decimal string that parses back to the same double; "inf", "-inf", "nan" otherwise.
std::string format_double(double v);
double parse_double(const std::string& s);

/// Finite values become JSON numbers, the rest strings as in format_double.
Json number_json(double v);
double number_from_json(const Json& j);

Json vector_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j);
/// {"rows", "cols", "data"} with data in row-major order.
Json matrix_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);

Json to_json(const Box& box);
Box box_from_json(const Json& j);

Json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const Json& j);
/// Values are stored as decimal strings; the round trip is bit-exact.
Json to_json(const ParamVec& p);
ParamVec param_vec_from_json(const Json& j);

Json to_json(const FitReport& r);
Json to_json(const BoundsReport& r);
BoundsReport bounds_report_from_json(const Json& j);
Json to_json(const ConstraintCert& c);
Json to_json(const ConvexConstraint& c);
Json to_json(const UncertainModel& m);
Json to_json(const MpQp& qp);
MpQp mpqp_from_json(const Json& j);
Json to_json(const MpcSpec& s);
MpcSpec mpc_spec_from_json(const Json& j);

/// Configuration blocks. The *_from_json functions only overwrite keys present in `j`.
Json to_json(const DirectConfig& c);
void apply_json(DirectConfig& c, const Json& j);
Json to_json(const LbfgsConfig& c);
void apply_json(LbfgsConfig& c, const Json& j);
Json to_json(const TrainConfig& c);
void apply_json(TrainConfig& c, const Json& j);
Json to_json(const ActiveConfig& c);
void apply_json(ActiveConfig& c, const Json& j);
Json to_json(const BoundsConfig& c);
void apply_json(BoundsConfig& c, const Json& j);
Json to_json(const DeltaConfig& c);
void apply_json(DeltaConfig& c, const Json& j);

/// RFC-4180 field: quoted when it contains a comma, quote, CR or LF.
std::string csv_field(const std::string& s);
/// Fields joined by commas and terminated by CRLF.
std::string csv_row(const std::vector<std::string>& fields);

/// iteration, n_samples, error, train_loss, direct_evals, failed, wall_seconds.
std::string history_csv(const FitReport& r);

/// Error bounds (lower, upper) with f - f_hat expected in [lower, upper].
using BoundFn = std::function<std::pair<double, double>(const Eigen::VectorXd&)>;

/// Grid over the box with `resolution` points per free dimension:
/// x1..xn, f, f_hat, err, lower, upper (bound columns empty without `bounds`).
std::string grid_csv(const ScalarField& f, const Model& model, const Eigen::VectorXd& theta, const Box& box,
                     int resolution, const BoundFn& bounds = {});
std::string grid_csv_header(Eigen::Index n);

/// t, xi_i, u_i, tau_i, r_i and, when given, u_exact_i and u_approx_i.
std::string trajectory_csv(const Trajectory& tr, const Eigen::MatrixXd* u_exact = nullptr,
                           const Eigen::MatrixXd* u_approx = nullptr);

/// One-step predictions along a true trajectory driven by `inputs` (one row per step):
/// t, xi_i, xi_hat_i, lower_i, upper_i.
std::string rollout_csv(const UncertainModel& um, const OdeModel& ode, const Eigen::VectorXd& xi0,
                        const Eigen::MatrixXd& inputs);

}  // namespace wcreg
