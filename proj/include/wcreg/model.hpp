#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "wcreg/math.hpp"

namespace wcreg {

/// One named weight or bias inside the flat parameter vector (column-major).
struct ParamBlock {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index offset = 0;

  Eigen::Index size() const { return rows * cols; }
};

class ParamLayout {
 public:
  Eigen::Index add(std::string name, Eigen::Index rows, Eigen::Index cols);
  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  const ParamBlock& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  Eigen::Index total() const { return total_; }

  /// Throws unless offsets are contiguous, non-overlapping and sum to total().
  void validate() const;

  bool operator==(const ParamLayout& o) const;

 private:
  std::vector<ParamBlock> blocks_;
  Eigen::Index total_ = 0;
};

/// Flat trainable vector plus the layout that names its pieces.
struct ParamVec {
  Eigen::VectorXd values;
  ParamLayout layout;

  Eigen::Map<const Eigen::MatrixXd> block(const std::string& name) const {
    const auto& b = layout.at(name);
    return {values.data() + b.offset, b.rows, b.cols};
  }
  Eigen::Map<Eigen::MatrixXd> block(const std::string& name) {
    const auto& b = layout.at(name);
    return {values.data() + b.offset, b.rows, b.cols};
  }
};

enum class Family { kMlp, kMaxAffine, kInputConvex, kEnvelope };

std::string family_name(Family f);
Family parse_family(const std::string& s);

/// Affine constraint rows g(x) = G x + g <= 0 and h(x) = H x + h = 0 defining the
/// set on which a gated model is forced to a prescribed function.
struct IndicatorSpec {
  enum class Mode { kPwa, kExp };

  Mode mode = Mode::kPwa;
  Eigen::MatrixXd G;
  Eigen::VectorXd g;
  Eigen::MatrixXd H;
  Eigen::VectorXd h;
  double beta = 1.0;
  bool trainable = false;

  Eigen::Index num_inequalities() const { return G.rows(); }
  Eigen::Index num_equalities() const { return H.rows(); }
  void validate(Eigen::Index n_inputs) const;
};

/// Value of the indicator approximation in [0,1]; exactly 1 on the set.
double indicator_eval(const IndicatorSpec& spec, const Eigen::VectorXd& x);
double indicator_eval(const IndicatorSpec& spec, const Eigen::VectorXd& x, double beta);

struct GateSpec {
  IndicatorSpec indicator;
  Eigen::VectorXd w_coef;  // w(x) = w_coef' x + w_offset
  double w_offset = 0.0;
};

/// Output bounds may tighten with one input coordinate (a previous control move):
/// lo(x) = max(y_min, x[index] + d_min), hi(x) = min(y_max, x[index] + d_max).
struct RateLimit {
  Eigen::Index index = 0;
  double d_min = -1.0;
  double d_max = 1.0;
};

struct SaturationSpec {
  enum class Mode { kHard, kSmooth };

  Mode mode = Mode::kHard;
  double y_min = -1.0;
  double y_max = 1.0;
  double eta = 10.0;
  bool trainable = false;
  std::optional<RateLimit> rate;

  std::pair<double, double> bounds_at(const Eigen::VectorXd& x) const;
  void validate(Eigen::Index n_inputs) const;
};

struct ModelSpec {
  Family family = Family::kMlp;
  Eigen::Index n_inputs = 1;
  /// Hidden widths; for max-affine a single entry holding the number of planes.
  std::vector<Eigen::Index> widths;
  std::vector<Activation> activations;
  bool bypass = false;
  std::optional<GateSpec> gate;
  std::optional<SaturationSpec> saturation;

  void validate() const;

  static ModelSpec mlp(Eigen::Index n_inputs, std::vector<Eigen::Index> widths, Activation act, bool bypass = false);
  static ModelSpec linear(Eigen::Index n_inputs);
  static ModelSpec max_affine(Eigen::Index n_inputs, Eigen::Index n_planes);
  static ModelSpec input_convex(Eigen::Index n_inputs, std::vector<Eigen::Index> widths);
  static ModelSpec envelope(Eigen::Index n_inputs, std::vector<Eigen::Index> widths, Activation hidden,
                            Activation nonnegative);
};

struct ModelGrad {
  double value = 0.0;
  Eigen::VectorXd d_theta;
  Eigen::VectorXd d_x;
};

/// Parametric scalar model f(x; theta). Every method is const and reentrant.
/// Batch methods take inputs as columns of an n_inputs x N matrix.
class Model {
 public:
  /// Lower floor of the envelope output bias realization.
  static constexpr double kEnvelopeFloor = 1e-8;
  /// Floor added to softplus when mapping raw beta/eta to positive values.
  static constexpr double kPositiveFloor = 1e-6;

  explicit Model(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  const ParamLayout& layout() const { return layout_; }
  Eigen::Index num_params() const { return layout_.total(); }
  Eigen::Index n_inputs() const { return spec_.n_inputs; }

  /// Glorot-uniform weights, zero biases; beta/eta raw values reproduce the spec values.
  Eigen::VectorXd initial_params(std::mt19937_64& rng) const;
  ParamVec initial_param_vec(std::uint64_t seed) const;

  double eval(const Eigen::VectorXd& theta, const Eigen::VectorXd& x) const;
  Eigen::VectorXd eval_batch(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X) const;

  /// Reverse mode for seed * f(x; theta).
  ModelGrad grad(const Eigen::VectorXd& theta, const Eigen::VectorXd& x, double seed = 1.0) const;

  /// Returns outputs; adds sum_k seeds[k] * d f(x_k)/d theta to grad_theta and, if
  /// requested, writes seeds[k] * d f(x_k)/d x_k into column k of grad_x.
  Eigen::VectorXd backward_batch(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                                 const Eigen::VectorXd& seeds, Eigen::VectorXd& grad_theta,
                                 Eigen::MatrixXd* grad_x = nullptr) const;

  /// Output of the core family, before gating and saturation.
  Eigen::VectorXd core_batch(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X) const;

  /// Effective gate sharpness and saturation smoothness (trainable ones read theta).
  double beta(const Eigen::VectorXd& theta) const;
  double eta(const Eigen::VectorXd& theta) const;

 private:
  struct Cache;

  void check_inputs(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X) const;
  Eigen::RowVectorXd core_forward(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X, Cache* cache) const;
  void core_backward(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X, const Cache& cache,
                     const Eigen::RowVectorXd& seeds, Eigen::VectorXd& grad_theta, Eigen::MatrixXd* grad_x) const;

  Eigen::Map<const Eigen::MatrixXd> view(const Eigen::VectorXd& theta, const std::string& name) const {
    const auto& b = layout_.at(name);
    return {theta.data() + b.offset, b.rows, b.cols};
  }

  ModelSpec spec_;
  ParamLayout layout_;
};

/// max_i (A_i x - b_i); `row` receives the smallest attaining index.
double max_affine_eval(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& x,
                       Eigen::Index* row = nullptr);

/// delta(x) w(x) + (1 - delta(x)) v(x) for a gate and an ungated inner model.
double gated_eval(const GateSpec& gate, const Model& inner, const Eigen::VectorXd& theta, const Eigen::VectorXd& x);

}  // namespace wcreg
