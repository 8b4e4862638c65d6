#include "wcreg/io.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "wcreg/error.hpp"

namespace wcreg {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ConfigError("json", "not a number: '" + s + "'");
  return v;
}

Json number_json(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

double number_from_json(const Json& j) {
  if (j.is_string()) return parse_double(j.get<std::string>());
  if (!j.is_number()) throw ConfigError("json", "expected a number");
  return j.get<double>();
}

Json vector_json(const VectorXd& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(number_json(v[i]));
  return a;
}

VectorXd vector_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("json", "expected an array");
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = number_from_json(j[i]);
  return v;
}

Json matrix_json(const MatrixXd& m) {
  Json data = Json::array();
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) data.push_back(number_json(m(r, c)));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

MatrixXd matrix_from_json(const Json& j) {
  const Index rows = j.at("rows").get<Index>(), cols = j.at("cols").get<Index>();
  const Json& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != rows * cols)
    throw ConfigError("json", "matrix data does not match rows x cols");
  MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = number_from_json(data[r * cols + c]);
  return m;
}

Json to_json(const Box& box) { return Json{{"lower", vector_json(box.lower)}, {"upper", vector_json(box.upper)}}; }

Box box_from_json(const Json& j) { return Box(vector_from_json(j.at("lower")), vector_from_json(j.at("upper"))); }

namespace {

Json indicator_json(const IndicatorSpec& s) {
  return Json{{"mode", s.mode == IndicatorSpec::Mode::kPwa ? "pwa" : "exp"},
              {"G", matrix_json(s.G)},
              {"g", vector_json(s.g)},
              {"H", matrix_json(s.H)},
              {"h", vector_json(s.h)},
              {"beta", number_json(s.beta)},
              {"trainable", s.trainable}};
}

IndicatorSpec indicator_from_json(const Json& j) {
  IndicatorSpec s;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode != "pwa" && mode != "exp") throw ConfigError("json", "unknown indicator mode '" + mode + "'");
  s.mode = mode == "pwa" ? IndicatorSpec::Mode::kPwa : IndicatorSpec::Mode::kExp;
  s.G = matrix_from_json(j.at("G"));
  s.g = vector_from_json(j.at("g"));
  s.H = matrix_from_json(j.at("H"));
  s.h = vector_from_json(j.at("h"));
  s.beta = number_from_json(j.at("beta"));
  s.trainable = j.at("trainable").get<bool>();
  return s;
}

Json saturation_json(const SaturationSpec& s) {
  Json j{{"mode", s.mode == SaturationSpec::Mode::kHard ? "hard" : "smooth"},
         {"y_min", number_json(s.y_min)},
         {"y_max", number_json(s.y_max)},
         {"eta", number_json(s.eta)},
         {"trainable", s.trainable},
         {"rate", nullptr}};
  if (s.rate)
    j["rate"] = Json{{"index", s.rate->index}, {"d_min", number_json(s.rate->d_min)}, {"d_max", number_json(s.rate->d_max)}};
  return j;
}

SaturationSpec saturation_from_json(const Json& j) {
  SaturationSpec s;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode != "hard" && mode != "smooth") throw ConfigError("json", "unknown saturation mode '" + mode + "'");
  s.mode = mode == "hard" ? SaturationSpec::Mode::kHard : SaturationSpec::Mode::kSmooth;
  s.y_min = number_from_json(j.at("y_min"));
  s.y_max = number_from_json(j.at("y_max"));
  s.eta = number_from_json(j.at("eta"));
  s.trainable = j.at("trainable").get<bool>();
  if (!j.at("rate").is_null()) {
    const Json& r = j.at("rate");
    s.rate = RateLimit{r.at("index").get<Index>(), number_from_json(r.at("d_min")), number_from_json(r.at("d_max"))};
  }
  return s;
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_number(const Json& j, const char* key, double& out) {
  if (j.contains(key)) out = number_from_json(j.at(key));
}

}  // namespace

Json to_json(const ModelSpec& spec) {
  Json acts = Json::array();
  for (const auto& a : spec.activations) acts.push_back(a.name());
  Json j{{"family", family_name(spec.family)},
         {"n_inputs", spec.n_inputs},
         {"widths", spec.widths},
         {"activations", acts},
         {"bypass", spec.bypass},
         {"gate", nullptr},
         {"saturation", nullptr}};
  if (spec.gate)
    j["gate"] = Json{{"indicator", indicator_json(spec.gate->indicator)},
                     {"w_coef", vector_json(spec.gate->w_coef)},
                     {"w_offset", number_json(spec.gate->w_offset)}};
  if (spec.saturation) j["saturation"] = saturation_json(*spec.saturation);
  return j;
}

ModelSpec model_spec_from_json(const Json& j) {
  ModelSpec s;
  s.family = parse_family(j.at("family").get<std::string>());
  s.n_inputs = j.at("n_inputs").get<Index>();
  s.widths = j.at("widths").get<std::vector<Index>>();
  for (const auto& a : j.at("activations")) s.activations.push_back(Activation::parse(a.get<std::string>()));
  s.bypass = j.at("bypass").get<bool>();
  if (!j.at("gate").is_null()) {
    const Json& g = j.at("gate");
    GateSpec gate;
    gate.indicator = indicator_from_json(g.at("indicator"));
    gate.w_coef = vector_from_json(g.at("w_coef"));
    gate.w_offset = number_from_json(g.at("w_offset"));
    s.gate = gate;
  }
  if (!j.at("saturation").is_null()) s.saturation = saturation_from_json(j.at("saturation"));
  s.validate();
  return s;
}

Json to_json(const ParamVec& p) {
  Json layout = Json::array();
  for (const auto& b : p.layout.blocks())
    layout.push_back(Json{{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}, {"offset", b.offset}});
  Json values = Json::array();
  for (Index i = 0; i < p.values.size(); ++i) values.push_back(format_double(p.values[i]));
  return Json{{"layout", layout}, {"values", values}};
}

ParamVec param_vec_from_json(const Json& j) {
  ParamVec p;
  for (const auto& b : j.at("layout")) {
    const Index off = p.layout.add(b.at("name").get<std::string>(), b.at("rows").get<Index>(), b.at("cols").get<Index>());
    if (off != b.at("offset").get<Index>()) throw ConfigError("json", "parameter layout offsets are not contiguous");
  }
  p.layout.validate();
  const Json& values = j.at("values");
  if (static_cast<Index>(values.size()) != p.layout.total())
    throw ConfigError("json", "parameter count differs from the layout");
  p.values.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) p.values[i] = parse_double(values[i].get<std::string>());
  return p;
}

Json to_json(const FitReport& r) {
  Json iters = Json::array();
  for (const auto& it : r.iterations)
    iters.push_back(Json{{"iteration", it.iteration},
                         {"n_samples", it.n_samples},
                         {"error", number_json(it.error)},
                         {"train_loss", number_json(it.train_loss)},
                         {"direct_evals", it.direct_evals},
                         {"failed", it.failed},
                         {"wall_seconds", it.wall_seconds}});
  Json acquired = Json::array();
  for (bool a : r.dataset_final.acquired) acquired.push_back(a);
  Json history = Json::array();
  for (double e : r.error_history) history.push_back(number_json(e));
  return Json{{"wce", number_json(r.wce)},
              {"recertified_wce", number_json(r.recertified_wce)},
              {"certified_wce", number_json(r.certified_wce())},
              {"recert_evals", r.recert_evals},
              {"best_iter", r.best_iter},
              {"stop_reason", stop_reason_name(r.stop_reason)},
              {"failed_iterations", r.failed_iterations},
              {"n_samples", r.dataset_final.size()},
              {"theta_star", to_json(r.theta_star)},
              {"error_history", history},
              {"iterations", iters},
              {"dataset", Json{{"xs", matrix_json(r.dataset_final.xs)},
                               {"ys", vector_json(r.dataset_final.ys)},
                               {"acquired", acquired}}}};
}

Json to_json(const BoundsReport& r) {
  auto envelope = [](const std::shared_ptr<const Model>& m, const ParamVec& psi, double kappa) -> Json {
    if (!m) return nullptr;
    return Json{{"spec", to_json(m->spec())}, {"psi", to_json(psi)}, {"kappa", number_json(kappa)}};
  };
  return Json{{"form", bound_form_name(r.form)},
              {"box", to_json(r.box)},
              {"wce", number_json(r.wce)},
              {"const_lower", number_json(r.const_lower)},
              {"const_upper", number_json(r.const_upper)},
              {"certification_evals", r.certification_evals},
              {"upper_envelope", envelope(r.env_u, r.psi_u, r.kappa_u)},
              {"lower_envelope", envelope(r.env_l, r.psi_l, r.kappa_l)}};
}

BoundsReport bounds_report_from_json(const Json& j) {
  BoundsReport r;
  r.form = parse_bound_form(j.at("form").get<std::string>());
  r.box = box_from_json(j.at("box"));
  r.wce = number_from_json(j.at("wce"));
  r.const_lower = number_from_json(j.at("const_lower"));
  r.const_upper = number_from_json(j.at("const_upper"));
  r.certification_evals = j.value("certification_evals", 0);
  auto envelope = [&j](const char* key, std::shared_ptr<const Model>& m, ParamVec& psi, double& kappa) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    const Json& e = j.at(key);
    m = std::make_shared<const Model>(model_spec_from_json(e.at("spec")));
    psi = param_vec_from_json(e.at("psi"));
    kappa = number_from_json(e.at("kappa"));
  };
  envelope("upper_envelope", r.env_u, r.psi_u, r.kappa_u);
  envelope("lower_envelope", r.env_l, r.psi_l, r.kappa_l);
  const bool needs_u = r.form == BoundForm::kInputSym || r.form == BoundForm::kInputAsym;
  if ((needs_u && !r.env_u) || (r.form == BoundForm::kInputAsym && !r.env_l))
    throw ConfigError("json", "input-dependent bounds without their envelope");
  return r;
}

Json to_json(const ConstraintCert& c) {
  return Json{{"model", c.model ? to_json(c.model->spec()) : Json(nullptr)},
              {"theta_star", to_json(c.theta_star)},
              {"box", to_json(c.box)},
              {"delta_f", number_json(c.delta_f)},
              {"epsilon_f", number_json(c.epsilon_f)},
              {"sign_eta", number_json(c.sign_eta)},
              {"delta_evals", c.delta_evals},
              {"delta_argmin", vector_json(c.delta_argmin)}};
}

Json to_json(const ConvexConstraint& c) {
  if (c.polyhedral) return Json{{"polyhedral", true}, {"A", matrix_json(c.A)}, {"b", vector_json(c.b)}};
  return Json{{"polyhedral", false}, {"offset", number_json(c.offset)}};
}

Json to_json(const UncertainModel& m) {
  auto comps = [](const std::vector<LearnedComponent>& cs) {
    Json a = Json::array();
    for (const auto& c : cs)
      a.push_back(Json{{"model", to_json(c.model->spec())},
                       {"theta", to_json(c.theta)},
                       {"wce", number_json(c.wce)},
                       {"lower", number_json(c.lower)},
                       {"upper", number_json(c.upper)},
                       {"fit_wce", number_json(c.fit.wce)},
                       {"fit_recertified_wce", number_json(c.fit.recertified_wce)},
                       {"n_samples", c.fit.dataset_final.size()}});
    return a;
  };
  auto intervals = [](const MatrixXd& I) {
    Json a = Json::array();
    for (Index r = 0; r < I.rows(); ++r) a.push_back(Json::array({number_json(I(r, 0)), number_json(I(r, 1))}));
    return a;
  };
  return Json{{"Ts", number_json(m.Ts)},
              {"integrator", integrator_name(m.integrator.method)},
              {"substeps", m.integrator.substeps},
              {"box", to_json(m.box)},
              {"W", intervals(m.W())},
              {"V", intervals(m.V())},
              {"states", comps(m.states)},
              {"outputs", comps(m.outputs)}};
}

Json to_json(const MpQp& qp) {
  return Json{{"Q", matrix_json(qp.Q)}, {"F", matrix_json(qp.F)}, {"f", vector_json(qp.f)},
              {"A", matrix_json(qp.A)}, {"B", matrix_json(qp.B)}, {"b", vector_json(qp.b)},
              {"box", to_json(qp.box)}, {"Y", matrix_json(qp.Y)}};
}

MpQp mpqp_from_json(const Json& j) {
  MpQp qp;
  qp.Q = matrix_from_json(j.at("Q"));
  qp.F = matrix_from_json(j.at("F"));
  qp.f = vector_from_json(j.at("f"));
  qp.A = matrix_from_json(j.at("A"));
  qp.B = matrix_from_json(j.at("B"));
  qp.b = vector_from_json(j.at("b"));
  if (j.contains("box")) qp.box = box_from_json(j.at("box"));
  if (j.contains("Y")) qp.Y = matrix_from_json(j.at("Y"));
  qp.validate();
  return qp;
}

Json to_json(const MpcSpec& s) {
  return Json{{"A", matrix_json(s.A)},          {"B", matrix_json(s.B)},          {"C", matrix_json(s.C)},
              {"N", s.N},                       {"Nu", s.Nu},                     {"Nc", s.Nc},
              {"Q_tau", matrix_json(s.Q_tau)},  {"Q_du", matrix_json(s.Q_du)},    {"rho2", number_json(s.rho2)},
              {"rho1", number_json(s.rho1)},    {"u_min", vector_json(s.u_min)},  {"u_max", vector_json(s.u_max)},
              {"du_min", vector_json(s.du_min)}, {"du_max", vector_json(s.du_max)}, {"tau_min", vector_json(s.tau_min)},
              {"tau_max", vector_json(s.tau_max)}, {"V_min", vector_json(s.V_min)}, {"V_max", vector_json(s.V_max)},
              {"region", to_json(s.region)},   {"Ts", number_json(s.Ts)}};
}

MpcSpec mpc_spec_from_json(const Json& j) {
  MpcSpec s;
  s.A = matrix_from_json(j.at("A"));
  s.B = matrix_from_json(j.at("B"));
  s.C = matrix_from_json(j.at("C"));
  s.N = j.at("N").get<int>();
  s.Nu = j.at("Nu").get<int>();
  s.Nc = j.at("Nc").get<int>();
  s.Q_tau = matrix_from_json(j.at("Q_tau"));
  s.Q_du = matrix_from_json(j.at("Q_du"));
  s.rho2 = number_from_json(j.at("rho2"));
  s.rho1 = number_from_json(j.at("rho1"));
  s.u_min = vector_from_json(j.at("u_min"));
  s.u_max = vector_from_json(j.at("u_max"));
  s.du_min = vector_from_json(j.at("du_min"));
  s.du_max = vector_from_json(j.at("du_max"));
  s.tau_min = vector_from_json(j.at("tau_min"));
  s.tau_max = vector_from_json(j.at("tau_max"));
  s.V_min = vector_from_json(j.at("V_min"));
  s.V_max = vector_from_json(j.at("V_max"));
  s.region = box_from_json(j.at("region"));
  s.Ts = number_from_json(j.at("Ts"));
  s.validate();
  return s;
}

Json to_json(const DirectConfig& c) {
  return Json{{"max_evals", c.max_evals},
              {"max_iters", c.max_iters},
              {"epsilon", number_json(c.epsilon)},
              {"local_polish", c.local_polish},
              {"polish_steps", c.polish_steps}};
}

void apply_json(DirectConfig& c, const Json& j) {
  read(j, "max_evals", c.max_evals);
  read(j, "max_iters", c.max_iters);
  read_number(j, "epsilon", c.epsilon);
  read(j, "local_polish", c.local_polish);
  read(j, "polish_steps", c.polish_steps);
  c.validate();
}

Json to_json(const LbfgsConfig& c) {
  return Json{{"memory", c.memory},
              {"max_iters", c.max_iters},
              {"grad_tol", number_json(c.grad_tol)},
              {"rel_tol", number_json(c.rel_tol)},
              {"c1", number_json(c.c1)},
              {"c2", number_json(c.c2)},
              {"max_line_search", c.max_line_search},
              {"n_starts", c.n_starts}};
}

void apply_json(LbfgsConfig& c, const Json& j) {
  read(j, "memory", c.memory);
  read(j, "max_iters", c.max_iters);
  read_number(j, "grad_tol", c.grad_tol);
  read_number(j, "rel_tol", c.rel_tol);
  read_number(j, "c1", c.c1);
  read_number(j, "c2", c.c2);
  read(j, "max_line_search", c.max_line_search);
  read(j, "n_starts", c.n_starts);
  c.validate();
}

Json to_json(const TrainConfig& c) {
  return Json{{"gamma", number_json(c.gamma)},
              {"nu", number_json(c.nu)},
              {"l2_reg", number_json(c.l2_reg)},
              {"sign_eta", c.sign_eta ? number_json(*c.sign_eta) : Json(nullptr)}};
}

void apply_json(TrainConfig& c, const Json& j) {
  read_number(j, "gamma", c.gamma);
  read_number(j, "nu", c.nu);
  read_number(j, "l2_reg", c.l2_reg);
  if (j.contains("sign_eta")) {
    if (j.at("sign_eta").is_null())
      c.sign_eta.reset();
    else
      c.sign_eta = number_from_json(j.at("sign_eta"));
  }
  c.validate();
}

Json to_json(const ActiveConfig& c) {
  return Json{{"n_initial", c.n_initial},
              {"max_steps", c.max_steps},
              {"err_threshold", number_json(c.err_threshold)},
              {"sampler", sampler_name(c.sampler)},
              {"seed", c.seed},
              {"recertify", c.recertify},
              {"train", to_json(c.train)},
              {"lbfgs", to_json(c.lbfgs)},
              {"global", to_json(c.global)},
              {"recert", to_json(c.recert)}};
}

void apply_json(ActiveConfig& c, const Json& j) {
  read(j, "n_initial", c.n_initial);
  read(j, "max_steps", c.max_steps);
  read_number(j, "err_threshold", c.err_threshold);
  if (j.contains("sampler")) c.sampler = parse_sampler(j.at("sampler").get<std::string>());
  read(j, "seed", c.seed);
  read(j, "recertify", c.recertify);
  if (j.contains("train")) apply_json(c.train, j.at("train"));
  if (j.contains("lbfgs")) apply_json(c.lbfgs, j.at("lbfgs"));
  if (j.contains("global")) apply_json(c.global, j.at("global"));
  if (j.contains("recert")) apply_json(c.recert, j.at("recert"));
  c.validate();
}

Json to_json(const BoundsConfig& c) {
  return Json{{"gamma", number_json(c.gamma)},
              {"mu", c.mu == EnvelopeMu::kIdentity ? "identity" : "square"},
              {"rho_psi", number_json(c.rho_psi)},
              {"global", to_json(c.global)},
              {"lbfgs", to_json(c.lbfgs)}};
}

void apply_json(BoundsConfig& c, const Json& j) {
  read_number(j, "gamma", c.gamma);
  if (j.contains("mu")) {
    const std::string mu = j.at("mu").get<std::string>();
    if (mu != "identity" && mu != "square") throw ConfigError("bounds.mu", "expected 'identity' or 'square'");
    c.mu = mu == "identity" ? EnvelopeMu::kIdentity : EnvelopeMu::kSquare;
  }
  read_number(j, "rho_psi", c.rho_psi);
  if (j.contains("global")) apply_json(c.global, j.at("global"));
  if (j.contains("lbfgs")) apply_json(c.lbfgs, j.at("lbfgs"));
  c.validate();
}

Json to_json(const DeltaConfig& c) {
  return Json{{"global", to_json(c.global)},
              {"zoom_rounds", c.zoom_rounds},
              {"zoom_factor", number_json(c.zoom_factor)}};
}

void apply_json(DeltaConfig& c, const Json& j) {
  if (j.contains("global")) apply_json(c.global, j.at("global"));
  read(j, "zoom_rounds", c.zoom_rounds);
  read_number(j, "zoom_factor", c.zoom_factor);
  if (c.zoom_rounds < 0 || !(c.zoom_factor > 0.0 && c.zoom_factor < 1.0))
    throw ConfigError("delta", "zoom_rounds >= 0 and zoom_factor in (0, 1) required");
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  return out + "\r\n";
}

std::string history_csv(const FitReport& r) {
  std::string out =
      csv_row({"iteration", "n_samples", "error", "train_loss", "direct_evals", "failed", "wall_seconds"});
  for (const auto& it : r.iterations)
    out += csv_row({std::to_string(it.iteration), std::to_string(it.n_samples), format_double(it.error),
                    format_double(it.train_loss), std::to_string(it.direct_evals), it.failed ? "1" : "0",
                    format_double(it.wall_seconds)});
  return out;
}

std::string grid_csv_header(Index n) {
  std::vector<std::string> h;
  for (Index i = 0; i < n; ++i) h.push_back("x" + std::to_string(i + 1));
  for (const char* c : {"f", "f_hat", "err", "lower", "upper"}) h.push_back(c);
  return csv_row(h);
}

std::string grid_csv(const ScalarField& f, const Model& model, const VectorXd& theta, const Box& box, int resolution,
                     const BoundFn& bounds) {
  if (resolution < 2) throw ConfigError("grid", "resolution must be at least 2 per dimension");
  Index n_free = 0;
  for (Index i = 0; i < box.dim(); ++i)
    if (box.upper[i] > box.lower[i]) ++n_free;
  if (std::pow(static_cast<double>(resolution), static_cast<double>(n_free)) > 1e7)
    throw ConfigError("grid", "more than 1e7 grid points requested");
  const MatrixXd X = grid_sample(box, resolution);
  const VectorXd fhat = model.eval_batch(theta, X);
  std::string out = grid_csv_header(box.dim());
  std::vector<std::string> row;
  for (Index k = 0; k < X.cols(); ++k) {
    row.clear();
    for (Index i = 0; i < X.rows(); ++i) row.push_back(format_double(X(i, k)));
    const double fv = f(X.col(k));
    row.push_back(format_double(fv));
    row.push_back(format_double(fhat[k]));
    row.push_back(format_double(fv - fhat[k]));
    if (bounds) {
      const auto [lo, hi] = bounds(X.col(k));
      row.push_back(format_double(lo));
      row.push_back(format_double(hi));
    } else {
      row.push_back("");
      row.push_back("");
    }
    out += csv_row(row);
  }
  return out;
}

std::string trajectory_csv(const Trajectory& tr, const MatrixXd* u_exact, const MatrixXd* u_approx) {
  const Index steps = tr.u.rows();
  std::vector<std::string> h{"t"};
  auto names = [&h](const char* base, Index n) {
    for (Index i = 0; i < n; ++i) h.push_back(std::string(base) + std::to_string(i + 1));
  };
  names("xi", tr.xi.cols());
  names("u", tr.u.cols());
  names("tau", tr.tau.cols());
  names("r", tr.r.cols());
  if (u_exact) names("u_exact", u_exact->cols());
  if (u_approx) names("u_approx", u_approx->cols());
  std::string out = csv_row(h);
  for (Index t = 0; t < steps; ++t) {
    std::vector<std::string> row{std::to_string(t)};
    auto add = [&row, t](const MatrixXd& M) {
      for (Index i = 0; i < M.cols(); ++i) row.push_back(format_double(M(t, i)));
    };
    add(tr.xi);
    add(tr.u);
    add(tr.tau);
    add(tr.r);
    if (u_exact) add(*u_exact);
    if (u_approx) add(*u_approx);
    out += csv_row(row);
  }
  return out;
}

std::string rollout_csv(const UncertainModel& um, const OdeModel& ode, const VectorXd& xi0, const MatrixXd& inputs) {
  const Index n = ode.n_state;
  if (xi0.size() != n || inputs.cols() != ode.n_input) throw DimensionError("rollout", "state or input size mismatch");
  std::vector<std::string> h{"t"};
  for (const char* base : {"xi", "xi_hat", "lower", "upper"})
    for (Index i = 0; i < n; ++i) h.push_back(std::string(base) + std::to_string(i + 1));
  std::string out = csv_row(h);
  const MatrixXd W = um.W();
  VectorXd xi = xi0;
  for (Index t = 0; t < inputs.rows(); ++t) {
    const VectorXd u = inputs.row(t).transpose();
    const VectorXd pred = um.predict(xi, u);
    xi = integrate_step(ode, xi, u, um.Ts, um.integrator.method, um.integrator.substeps);
    std::vector<std::string> row{std::to_string(t + 1)};
    for (Index i = 0; i < n; ++i) row.push_back(format_double(xi[i]));
    for (Index i = 0; i < n; ++i) row.push_back(format_double(pred[i]));
    for (Index i = 0; i < n; ++i) row.push_back(format_double(pred[i] + W(i, 0)));
    for (Index i = 0; i < n; ++i) row.push_back(format_double(pred[i] + W(i, 1)));
    out += csv_row(row);
  }
  return out;
}

}  // namespace wcreg
