#include "wcreg/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wcreg/error.hpp"

namespace wcreg {

// ---------------------------------------------------------------------------
// ParamLayout

Eigen::Index ParamLayout::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
  if (contains(name)) throw ConfigError("ParamLayout", "duplicate block '" + name + "'");
  blocks_.push_back({std::move(name), rows, cols, total_});
  total_ += rows * cols;
  return blocks_.back().offset;
}

const ParamBlock& ParamLayout::at(const std::string& name) const {
  for (const auto& b : blocks_)
    if (b.name == name) return b;
  throw ConfigError("ParamLayout", "no block named '" + name + "'");
}

bool ParamLayout::contains(const std::string& name) const {
  return std::any_of(blocks_.begin(), blocks_.end(), [&](const ParamBlock& b) { return b.name == name; });
}

void ParamLayout::validate() const {
  Eigen::Index expected = 0;
  for (const auto& b : blocks_) {
    if (b.rows < 0 || b.cols < 0) throw ConfigError("ParamLayout", "negative shape in '" + b.name + "'");
    if (b.offset != expected) throw ConfigError("ParamLayout", "non-contiguous offset at '" + b.name + "'");
    expected += b.size();
  }
  if (expected != total_) throw ConfigError("ParamLayout", "total length mismatch");
}

bool ParamLayout::operator==(const ParamLayout& o) const {
  if (total_ != o.total_ || blocks_.size() != o.blocks_.size()) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto &a = blocks_[i], &b = o.blocks_[i];
    if (a.name != b.name || a.rows != b.rows || a.cols != b.cols || a.offset != b.offset) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Specs

std::string family_name(Family f) {
  switch (f) {
    case Family::kMlp: return "mlp";
    case Family::kMaxAffine: return "max-affine";
    case Family::kInputConvex: return "input-convex-nn";
    case Family::kEnvelope: return "envelope-nn";
  }
  return "mlp";
}

Family parse_family(const std::string& s) {
  if (s == "mlp") return Family::kMlp;
  if (s == "max-affine") return Family::kMaxAffine;
  if (s == "input-convex-nn") return Family::kInputConvex;
  if (s == "envelope-nn") return Family::kEnvelope;
  throw ConfigError("ModelSpec", "unknown family '" + s + "'");
}

void IndicatorSpec::validate(Eigen::Index n_inputs) const {
  if (!(beta > 0.0)) throw ConfigError("IndicatorSpec", "beta must be positive");
  if (G.rows() + H.rows() < 1) throw ConfigError("IndicatorSpec", "needs at least one constraint row");
  if ((G.rows() > 0 && G.cols() != n_inputs) || g.size() != G.rows())
    throw DimensionError("IndicatorSpec", "inequality rows do not match the input dimension");
  if ((H.rows() > 0 && H.cols() != n_inputs) || h.size() != H.rows())
    throw DimensionError("IndicatorSpec", "equality rows do not match the input dimension");
  if (!G.allFinite() || !g.allFinite() || !H.allFinite() || !h.allFinite())
    throw ConfigError("IndicatorSpec", "constraint rows must be finite");
}

namespace {

// Value of the indicator and, optionally, its derivatives w.r.t. beta and x.
double indicator_value_grad(const IndicatorSpec& s, const Eigen::VectorXd& x, double beta, double* d_beta,
                            Eigen::VectorXd* d_x) {
  const Eigen::Index ng = s.G.rows(), nh = s.H.rows();
  Eigen::VectorXd gv = ng > 0 ? Eigen::VectorXd(s.G * x + s.g) : Eigen::VectorXd();
  Eigen::VectorXd hv = nh > 0 ? Eigen::VectorXd(s.H * x + s.h) : Eigen::VectorXd();

  if (s.mode == IndicatorSpec::Mode::kPwa) {
    // max over col(g, h, -h, 0), smallest index on ties; the zero entry comes last.
    double m = 0.0;
    Eigen::Index arg = -1;
    bool first = true;
    auto consider = [&](double v, Eigen::Index idx) {
      if (first || v > m) {
        m = v;
        arg = idx;
        first = false;
      }
    };
    for (Eigen::Index i = 0; i < ng; ++i) consider(gv[i], i);
    for (Eigen::Index j = 0; j < nh; ++j) consider(hv[j], ng + j);
    for (Eigen::Index j = 0; j < nh; ++j) consider(-hv[j], ng + nh + j);
    consider(0.0, -1);
    const double t = 1.0 - beta * m;
    if (d_beta) *d_beta = t > 0.0 ? -m : 0.0;
    if (d_x) {
      d_x->setZero(x.size());
      if (t > 0.0 && arg >= 0) {
        if (arg < ng)
          *d_x = -beta * s.G.row(arg).transpose();
        else if (arg < ng + nh)
          *d_x = -beta * s.H.row(arg - ng).transpose();
        else
          *d_x = beta * s.H.row(arg - ng - nh).transpose();
      }
    }
    return t > 0.0 ? t : 0.0;
  }

  double viol = 0.0;
  for (Eigen::Index i = 0; i < ng; ++i) viol += maxzero(gv[i]);
  for (Eigen::Index j = 0; j < nh; ++j) viol += std::abs(hv[j]);
  const double delta = viol > 0.0 ? std::exp(-beta * viol) : 1.0;
  if (d_beta) *d_beta = -viol * delta;
  if (d_x) {
    d_x->setZero(x.size());
    if (viol > 0.0) {
      Eigen::VectorXd dv = Eigen::VectorXd::Zero(x.size());
      for (Eigen::Index i = 0; i < ng; ++i)
        if (gv[i] > 0.0) dv += s.G.row(i).transpose();
      for (Eigen::Index j = 0; j < nh; ++j) {
        if (hv[j] > 0.0) dv += s.H.row(j).transpose();
        if (hv[j] < 0.0) dv -= s.H.row(j).transpose();
      }
      *d_x = -beta * delta * dv;
    }
  }
  return delta;
}

}  // namespace

double indicator_eval(const IndicatorSpec& spec, const Eigen::VectorXd& x, double beta) {
  if (!(beta > 0.0)) throw ConfigError("indicator", "beta must be positive");
  if ((spec.G.rows() > 0 && spec.G.cols() != x.size()) || (spec.H.rows() > 0 && spec.H.cols() != x.size()))
    throw DimensionError("indicator", "x dimension does not match constraint rows");
  return indicator_value_grad(spec, x, beta, nullptr, nullptr);
}

double indicator_eval(const IndicatorSpec& spec, const Eigen::VectorXd& x) {
  return indicator_eval(spec, x, spec.beta);
}

std::pair<double, double> SaturationSpec::bounds_at(const Eigen::VectorXd& x) const {
  double lo = y_min, hi = y_max;
  if (rate) {
    lo = std::max(lo, x[rate->index] + rate->d_min);
    hi = std::min(hi, x[rate->index] + rate->d_max);
  }
  return {lo, hi};
}

void SaturationSpec::validate(Eigen::Index n_inputs) const {
  if (!(eta > 0.0)) throw ConfigError("SaturationSpec", "eta must be positive");
  if (mode == Mode::kSmooth && !(y_min < y_max)) throw ConfigError("SaturationSpec", "smooth mode needs y_min < y_max");
  if (mode == Mode::kHard && y_min > y_max) throw ConfigError("SaturationSpec", "y_min > y_max");
  if (rate) {
    if (rate->index < 0 || rate->index >= n_inputs) throw DimensionError("SaturationSpec", "rate index out of range");
    if (rate->d_min > rate->d_max) throw ConfigError("SaturationSpec", "rate d_min > d_max");
  }
}

void ModelSpec::validate() const {
  if (n_inputs < 1) throw ConfigError("ModelSpec", "n_inputs must be at least 1");
  for (auto w : widths)
    if (w < 1) throw ConfigError("ModelSpec", "layer widths must be at least 1");
  for (const auto& a : activations)
    if (a.kind == ActivationKind::kLeakyRelu && !(a.slope > 0.0 && a.slope < 1.0))
      throw ConfigError("ModelSpec", "leaky-relu slope must lie in (0,1)");
  switch (family) {
    case Family::kMaxAffine:
      if (widths.size() != 1) throw ConfigError("ModelSpec", "max-affine takes exactly one width (plane count)");
      break;
    case Family::kMlp:
      if (activations.size() != widths.size()) throw ConfigError("ModelSpec", "one activation per hidden layer");
      break;
    case Family::kInputConvex:
      if (widths.empty()) throw ConfigError("ModelSpec", "input-convex-nn needs a hidden layer");
      if (activations.size() != widths.size()) throw ConfigError("ModelSpec", "one activation per hidden layer");
      for (const auto& a : activations)
        if (a.kind != ActivationKind::kSoftplus)
          throw ConfigError("ModelSpec", "input-convex-nn hidden activations must be softplus");
      break;
    case Family::kEnvelope:
      if (widths.empty()) throw ConfigError("ModelSpec", "envelope-nn needs a hidden layer");
      if (activations.size() != widths.size()) throw ConfigError("ModelSpec", "one activation per hidden layer");
      if (!activations.back().nonnegative())
        throw ConfigError("ModelSpec", "envelope-nn last activation must be nonnegative");
      if (bypass) throw ConfigError("ModelSpec", "envelope-nn has no linear bypass");
      break;
  }
  if (gate) {
    gate->indicator.validate(n_inputs);
    if (gate->w_coef.size() != n_inputs) throw DimensionError("ModelSpec", "gate w(x) coefficient size");
  }
  if (saturation) saturation->validate(n_inputs);
  if (family == Family::kEnvelope && (gate || saturation))
    throw ConfigError("ModelSpec", "envelope-nn cannot be gated or saturated");
}

ModelSpec ModelSpec::mlp(Eigen::Index n_inputs, std::vector<Eigen::Index> widths, Activation act, bool bypass) {
  ModelSpec s;
  s.family = Family::kMlp;
  s.n_inputs = n_inputs;
  s.activations.assign(widths.size(), act);
  s.widths = std::move(widths);
  s.bypass = bypass;
  return s;
}

ModelSpec ModelSpec::linear(Eigen::Index n_inputs) { return mlp(n_inputs, {}, Activation::linear()); }

ModelSpec ModelSpec::max_affine(Eigen::Index n_inputs, Eigen::Index n_planes) {
  ModelSpec s;
  s.family = Family::kMaxAffine;
  s.n_inputs = n_inputs;
  s.widths = {n_planes};
  return s;
}

ModelSpec ModelSpec::input_convex(Eigen::Index n_inputs, std::vector<Eigen::Index> widths) {
  ModelSpec s;
  s.family = Family::kInputConvex;
  s.n_inputs = n_inputs;
  s.activations.assign(widths.size(), Activation::softplus());
  s.widths = std::move(widths);
  s.bypass = true;
  return s;
}

ModelSpec ModelSpec::envelope(Eigen::Index n_inputs, std::vector<Eigen::Index> widths, Activation hidden,
                              Activation nonnegative) {
  ModelSpec s;
  s.family = Family::kEnvelope;
  s.n_inputs = n_inputs;
  s.activations.assign(widths.size(), hidden);
  if (!s.activations.empty()) s.activations.back() = nonnegative;
  s.widths = std::move(widths);
  return s;
}

// ---------------------------------------------------------------------------
// Model

struct Model::Cache {
  std::vector<Eigen::MatrixXd> Z;  // pre-activations per hidden layer
  std::vector<Eigen::MatrixXd> H;  // activations per hidden layer
  std::vector<Eigen::Index> argmax;
};

namespace {

std::string layer_name(std::size_t l) { return "layer " + std::to_string(l); }

bool squares_hidden(Family f) { return f == Family::kInputConvex; }
bool squares_output(Family f) { return f == Family::kInputConvex || f == Family::kEnvelope; }

}  // namespace

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const Eigen::Index n0 = spec_.n_inputs;
  if (spec_.family == Family::kMaxAffine) {
    layout_.add("A", spec_.widths[0], n0);
    layout_.add("b", spec_.widths[0], 1);
  } else {
    Eigen::Index prev = n0;
    for (std::size_t l = 0; l < spec_.widths.size(); ++l) {
      const auto w = spec_.widths[l];
      layout_.add("W" + std::to_string(l + 1), w, prev);
      layout_.add("b" + std::to_string(l + 1), w, 1);
      if (spec_.bypass && l > 0) layout_.add("V" + std::to_string(l + 1), w, n0);
      prev = w;
    }
    layout_.add("W_out", 1, prev);
    layout_.add("b_out", 1, 1);
    if (spec_.bypass && !spec_.widths.empty()) layout_.add("V_out", 1, n0);
  }
  if (spec_.gate && spec_.gate->indicator.trainable) layout_.add("beta_raw", 1, 1);
  if (spec_.saturation && spec_.saturation->mode == SaturationSpec::Mode::kSmooth && spec_.saturation->trainable)
    layout_.add("eta_raw", 1, 1);
  layout_.validate();
}

Eigen::VectorXd Model::initial_params(std::mt19937_64& rng) const {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(layout_.total());
  for (const auto& b : layout_.blocks()) {
    const char kind = b.name[0];
    if (kind == 'W' || kind == 'V' || kind == 'A') {
      const double limit = std::sqrt(6.0 / static_cast<double>(b.rows + b.cols));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (Eigen::Index i = 0; i < b.size(); ++i) theta[b.offset + i] = dist(rng);
    }
  }
  if (layout_.contains("beta_raw"))
    theta[layout_.at("beta_raw").offset] = softplus_inverse(std::max(spec_.gate->indicator.beta - kPositiveFloor, 1e-12));
  if (layout_.contains("eta_raw"))
    theta[layout_.at("eta_raw").offset] = softplus_inverse(std::max(spec_.saturation->eta - kPositiveFloor, 1e-12));
  return theta;
}

ParamVec Model::initial_param_vec(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  return {initial_params(rng), layout_};
}

double Model::beta(const Eigen::VectorXd& theta) const {
  if (!spec_.gate) return 0.0;
  if (!spec_.gate->indicator.trainable) return spec_.gate->indicator.beta;
  return softplus(theta[layout_.at("beta_raw").offset]) + kPositiveFloor;
}

double Model::eta(const Eigen::VectorXd& theta) const {
  if (!spec_.saturation) return 0.0;
  if (!(spec_.saturation->mode == SaturationSpec::Mode::kSmooth && spec_.saturation->trainable))
    return spec_.saturation->eta;
  return softplus(theta[layout_.at("eta_raw").offset]) + kPositiveFloor;
}

void Model::check_inputs(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X) const {
  if (theta.size() != layout_.total())
    throw DimensionError("theta", "expected " + std::to_string(layout_.total()) + " parameters, got " +
                                      std::to_string(theta.size()));
  if (X.rows() != spec_.n_inputs)
    throw DimensionError(layer_name(1), "expected input dimension " + std::to_string(spec_.n_inputs) + ", got " +
                                            std::to_string(X.rows()));
}

Eigen::RowVectorXd Model::core_forward(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X, Cache* cache) const {
  const Eigen::Index N = X.cols();
  if (spec_.family == Family::kMaxAffine) {
    const auto A = view(theta, "A");
    const auto b = view(theta, "b");
    Eigen::MatrixXd P = A * X;
    P.colwise() -= b.col(0);
    Eigen::RowVectorXd out(N);
    if (cache) cache->argmax.resize(N);
    for (Eigen::Index k = 0; k < N; ++k) {
      Eigen::Index arg = 0;
      double m = P(0, k);
      for (Eigen::Index i = 1; i < P.rows(); ++i)
        if (P(i, k) > m) {
          m = P(i, k);
          arg = i;
        }
      out[k] = m;
      if (cache) cache->argmax[k] = arg;
    }
    if (!out.allFinite()) throw NumericError(layer_name(1), "non-finite max-affine value");
    return out;
  }

  const std::size_t L = spec_.widths.size();
  if (cache) {
    cache->Z.resize(L);
    cache->H.resize(L);
  }
  Eigen::MatrixXd Hprev = X;
  for (std::size_t l = 0; l < L; ++l) {
    const std::string id = std::to_string(l + 1);
    Eigen::MatrixXd W = view(theta, "W" + id);
    if (squares_hidden(spec_.family) && l > 0) W = W.cwiseProduct(W);
    Eigen::MatrixXd Z = W * Hprev;
    Z.colwise() += view(theta, "b" + id).col(0);
    if (spec_.bypass && l > 0) Z.noalias() += view(theta, "V" + id) * X;
    if (!Z.allFinite()) throw NumericError(layer_name(l + 1), "non-finite pre-activation");
    const Activation act = spec_.activations[l];
    Eigen::MatrixXd H = Z.unaryExpr([act](double z) { return act(z); });
    if (!H.allFinite()) throw NumericError(layer_name(l + 1), "non-finite activation");
    if (cache) {
      cache->Z[l] = std::move(Z);
      cache->H[l] = H;
    }
    Hprev = std::move(H);
  }
  Eigen::RowVectorXd Wout = view(theta, "W_out");
  if (squares_output(spec_.family)) Wout = Wout.cwiseProduct(Wout);
  double bout = view(theta, "b_out")(0, 0);
  if (spec_.family == Family::kEnvelope) bout = softplus(bout) + kEnvelopeFloor;
  Eigen::RowVectorXd out = Wout * Hprev;
  out.array() += bout;
  if (spec_.bypass && L > 0) out.noalias() += view(theta, "V_out") * X;
  if (!out.allFinite()) throw NumericError(layer_name(L + 1), "non-finite output");
  return out;
}

void Model::core_backward(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X, const Cache& cache,
                          const Eigen::RowVectorXd& seeds, Eigen::VectorXd& grad_theta,
                          Eigen::MatrixXd* grad_x) const {
  auto gview = [&](const std::string& name) {
    const auto& b = layout_.at(name);
    return Eigen::Map<Eigen::MatrixXd>(grad_theta.data() + b.offset, b.rows, b.cols);
  };

  if (spec_.family == Family::kMaxAffine) {
    const auto A = view(theta, "A");
    auto gA = gview("A");
    auto gb = gview("b");
    for (Eigen::Index k = 0; k < X.cols(); ++k) {
      const Eigen::Index r = cache.argmax[k];
      gA.row(r) += seeds[k] * X.col(k).transpose();
      gb(r, 0) -= seeds[k];
      if (grad_x) grad_x->col(k) += seeds[k] * A.row(r).transpose();
    }
    return;
  }

  const std::size_t L = spec_.widths.size();
  const Eigen::MatrixXd& HL = L > 0 ? cache.H[L - 1] : X;

  const auto Wout_raw = view(theta, "W_out");
  Eigen::RowVectorXd Wout = Wout_raw;
  if (squares_output(spec_.family)) Wout = Wout.cwiseProduct(Wout);
  Eigen::RowVectorXd gWout = seeds * HL.transpose();
  if (squares_output(spec_.family)) gWout = 2.0 * Wout_raw.row(0).cwiseProduct(gWout);
  gview("W_out") += gWout;
  double gb = seeds.sum();
  if (spec_.family == Family::kEnvelope) gb *= logistic(view(theta, "b_out")(0, 0));
  gview("b_out")(0, 0) += gb;
  if (spec_.bypass && L > 0) {
    gview("V_out") += seeds * X.transpose();
    if (grad_x) *grad_x += view(theta, "V_out").transpose() * seeds;
  }

  Eigen::MatrixXd dH = Wout.transpose() * seeds;
  for (std::size_t l = L; l-- > 0;) {
    const std::string id = std::to_string(l + 1);
    const Activation act = spec_.activations[l];
    Eigen::MatrixXd dZ = dH.cwiseProduct(cache.Z[l].unaryExpr([act](double z) { return act.derivative(z); }));
    const Eigen::MatrixXd& Hprev = l > 0 ? cache.H[l - 1] : X;
    const auto Wraw = view(theta, "W" + id);
    Eigen::MatrixXd gW = dZ * Hprev.transpose();
    const bool sq = squares_hidden(spec_.family) && l > 0;
    if (sq) gW = 2.0 * Wraw.cwiseProduct(gW);
    gview("W" + id) += gW;
    gview("b" + id) += dZ.rowwise().sum();
    if (spec_.bypass && l > 0) {
      gview("V" + id) += dZ * X.transpose();
      if (grad_x) *grad_x += view(theta, "V" + id).transpose() * dZ;
    }
    dH = sq ? Eigen::MatrixXd(Wraw.cwiseProduct(Wraw).transpose() * dZ) : Eigen::MatrixXd(Wraw.transpose() * dZ);
  }
  if (grad_x) *grad_x += dH;
}

Eigen::VectorXd Model::core_batch(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X) const {
  check_inputs(theta, X);
  return core_forward(theta, X, nullptr).transpose();
}

Eigen::VectorXd Model::eval_batch(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X) const {
  check_inputs(theta, X);
  Eigen::VectorXd out = core_forward(theta, X, nullptr).transpose();
  if (!spec_.gate && !spec_.saturation) return out;
  const double b = beta(theta), e = eta(theta);
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    double u = out[k];
    if (spec_.gate) {
      const auto& gate = *spec_.gate;
      const double delta = indicator_value_grad(gate.indicator, X.col(k), b, nullptr, nullptr);
      const double w = gate.w_coef.dot(X.col(k)) + gate.w_offset;
      u = delta * w + (1.0 - delta) * u;
    }
    if (spec_.saturation) {
      const auto [lo, hi] = spec_.saturation->bounds_at(X.col(k));
      if (spec_.saturation->mode == SaturationSpec::Mode::kHard) {
        u = std::min(std::max(u, lo), hi);
      } else {
        if (!(lo < hi)) throw NumericError("saturation", "empty smooth saturation interval");
        u = sat_smooth(u, lo, hi, e);
      }
    }
    out[k] = u;
  }
  if (!out.allFinite()) throw NumericError("output", "non-finite model output");
  return out;
}

double Model::eval(const Eigen::VectorXd& theta, const Eigen::VectorXd& x) const {
  return eval_batch(theta, x)[0];
}

Eigen::VectorXd Model::backward_batch(const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
                                      const Eigen::VectorXd& seeds, Eigen::VectorXd& grad_theta,
                                      Eigen::MatrixXd* grad_x) const {
  check_inputs(theta, X);
  if (seeds.size() != X.cols()) throw DimensionError("backward", "one seed per sample required");
  if (grad_theta.size() != layout_.total()) grad_theta = Eigen::VectorXd::Zero(layout_.total());
  if (grad_x) grad_x->setZero(X.rows(), X.cols());

  Cache cache;
  const Eigen::RowVectorXd core = core_forward(theta, X, &cache);
  Eigen::VectorXd out = core.transpose();
  Eigen::RowVectorXd core_seeds = seeds.transpose();

  if (spec_.gate || spec_.saturation) {
    const double b = beta(theta), e = eta(theta);
    double g_beta = 0.0, g_eta = 0.0;
    Eigen::VectorXd dx_delta;
    for (Eigen::Index k = 0; k < X.cols(); ++k) {
      const Eigen::VectorXd x = X.col(k);
      const double v = core[k];
      double u = v, delta = 0.0, w = 0.0, d_delta_beta = 0.0;
      if (spec_.gate) {
        const auto& gate = *spec_.gate;
        delta = indicator_value_grad(gate.indicator, x, b, &d_delta_beta, grad_x ? &dx_delta : nullptr);
        w = gate.w_coef.dot(x) + gate.w_offset;
        u = delta * w + (1.0 - delta) * v;
      }
      double g_u = seeds[k];
      if (spec_.saturation) {
        const auto& sat = *spec_.saturation;
        const auto [lo, hi] = sat.bounds_at(x);
        double d_lo = 0.0, d_hi = 0.0, y;
        if (sat.mode == SaturationSpec::Mode::kHard) {
          // min(max(u, lo), hi), which also fixes the result when the bounds cross.
          if (std::max(u, lo) > hi) {
            y = hi;
            d_hi = 1.0;
            g_u = 0.0;
          } else if (u < lo) {
            y = lo;
            d_lo = 1.0;
            g_u = 0.0;
          } else {
            y = u;
          }
        } else {
          if (!(lo < hi)) throw NumericError("saturation", "empty smooth saturation interval");
          const auto sg = sat_smooth_grad(u, lo, hi, e);
          y = sg.value;
          d_lo = sg.d_min;
          d_hi = sg.d_max;
          g_u *= sg.d_y;
          g_eta += seeds[k] * sg.d_eta;
        }
        if (grad_x && sat.rate) {
          const double xr = x[sat.rate->index];
          if (xr + sat.rate->d_min > sat.y_min) (*grad_x)(sat.rate->index, k) += seeds[k] * d_lo;
          if (xr + sat.rate->d_max < sat.y_max) (*grad_x)(sat.rate->index, k) += seeds[k] * d_hi;
        }
        u = y;
      }
      if (spec_.gate) {
        core_seeds[k] = g_u * (1.0 - delta);
        const double g_delta = g_u * (w - v);
        g_beta += g_delta * d_delta_beta;
        if (grad_x) grad_x->col(k) += g_u * delta * spec_.gate->w_coef + g_delta * dx_delta;
      } else {
        core_seeds[k] = g_u;
      }
      out[k] = u;
    }
    if (layout_.contains("beta_raw")) {
      const auto off = layout_.at("beta_raw").offset;
      grad_theta[off] += g_beta * logistic(theta[off]);
    }
    if (layout_.contains("eta_raw")) {
      const auto off = layout_.at("eta_raw").offset;
      grad_theta[off] += g_eta * logistic(theta[off]);
    }
  }
  if (!out.allFinite()) throw NumericError("output", "non-finite model output");

  core_backward(theta, X, cache, core_seeds, grad_theta, grad_x);
  return out;
}

ModelGrad Model::grad(const Eigen::VectorXd& theta, const Eigen::VectorXd& x, double seed) const {
  ModelGrad g;
  g.d_theta = Eigen::VectorXd::Zero(layout_.total());
  Eigen::MatrixXd gx;
  Eigen::VectorXd seeds = Eigen::VectorXd::Constant(1, seed);
  g.value = backward_batch(theta, x, seeds, g.d_theta, &gx)[0];
  g.d_x = gx.col(0);
  return g;
}

// ---------------------------------------------------------------------------
// Free functions

double max_affine_eval(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& x,
                       Eigen::Index* row) {
  if (A.rows() < 1) throw DimensionError("max_affine", "needs at least one row");
  if (A.cols() != x.size() || b.size() != A.rows()) throw DimensionError("max_affine", "dimension mismatch");
  Eigen::Index arg = 0;
  double m = A.row(0).dot(x) - b[0];
  for (Eigen::Index i = 1; i < A.rows(); ++i) {
    const double v = A.row(i).dot(x) - b[i];
    if (v > m) {
      m = v;
      arg = i;
    }
  }
  if (row) *row = arg;
  return m;
}

double gated_eval(const GateSpec& gate, const Model& inner, const Eigen::VectorXd& theta, const Eigen::VectorXd& x) {
  const double delta = indicator_eval(gate.indicator, x);
  const double w = gate.w_coef.dot(x) + gate.w_offset;
  return delta * w + (1.0 - delta) * inner.eval(theta, x);
}

}  // namespace wcreg
