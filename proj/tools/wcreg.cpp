// Command-line front end: runs the registry benchmarks and writes report.json,
// history.csv, grid.csv and manifest.json into the output directory.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "wcreg/error.hpp"
#include "wcreg/io.hpp"
#include "wcreg/parallel.hpp"
#include "wcreg/problems.hpp"

namespace fs = std::filesystem;
using namespace wcreg;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr const char* kToolVersion = "0.1.0";

enum class ExitCode { kOk = 0, kError = 1, kThreshold = 2 };

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what) : Error("io", what + ": " + path) {}
};

struct Flags {
  std::string problem;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::optional<int> threads;
  std::optional<Index> n_initial;
  std::optional<int> max_steps;
  std::optional<double> err_threshold;
  std::optional<double> gamma;
  std::optional<double> nu;
  std::optional<int> budget_global;
  std::optional<int> resolution;
  std::optional<int> family;
  std::optional<std::string> form;
  std::string report;
};

struct ClosedLoop {
  int steps = 100;
  double reference = 0.5;
};

/// Everything a run needs besides the problem's functions; mirrors the config file schema.
struct RunConfig {
  std::string command;
  std::string problem;
  std::uint64_t seed = 0;
  int threads = 0;
  int grid_resolution = 0;
  int family = 0;
  ActiveConfig active;
  BoundForm bound_form = BoundForm::kInputAsym;
  BoundsConfig bounds;
  DeltaConfig delta;
  double sign_eta = 10.0;
  double epsilon_f = 1e-6;
  SysIdConfig sysid;
  ClosedLoop closed_loop;
};

Json to_json(const RunConfig& c) {
  return Json{{"problem", c.problem},
              {"seed", c.seed},
              {"threads", c.threads},
              {"grid_resolution", c.grid_resolution},
              {"family", c.family},
              {"active", wcreg::to_json(c.active)},
              {"bound_form", bound_form_name(c.bound_form)},
              {"bounds", wcreg::to_json(c.bounds)},
              {"delta", wcreg::to_json(c.delta)},
              {"sign_eta", number_json(c.sign_eta)},
              {"epsilon_f", number_json(c.epsilon_f)},
              {"sysid", Json{{"active", wcreg::to_json(c.sysid.active)},
                             {"bounds", wcreg::to_json(c.sysid.bounds)},
                             {"integrator", Json{{"method", integrator_name(c.sysid.integrator.method)},
                                                 {"substeps", c.sysid.integrator.substeps}}}}},
              {"closed_loop", Json{{"steps", c.closed_loop.steps}, {"reference", number_json(c.closed_loop.reference)}}}};
}

void apply_file(RunConfig& c, const Json& j) {
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("threads")) c.threads = j.at("threads").get<int>();
  if (j.contains("grid_resolution")) c.grid_resolution = j.at("grid_resolution").get<int>();
  if (j.contains("family")) c.family = j.at("family").get<int>();
  if (j.contains("active")) apply_json(c.active, j.at("active"));
  if (j.contains("bound_form")) c.bound_form = parse_bound_form(j.at("bound_form").get<std::string>());
  if (j.contains("bounds")) apply_json(c.bounds, j.at("bounds"));
  if (j.contains("delta")) apply_json(c.delta, j.at("delta"));
  if (j.contains("sign_eta")) c.sign_eta = number_from_json(j.at("sign_eta"));
  if (j.contains("epsilon_f")) c.epsilon_f = number_from_json(j.at("epsilon_f"));
  if (j.contains("sysid")) {
    const Json& s = j.at("sysid");
    if (s.contains("active")) apply_json(c.sysid.active, s.at("active"));
    if (s.contains("bounds")) apply_json(c.sysid.bounds, s.at("bounds"));
    if (s.contains("integrator")) {
      const Json& i = s.at("integrator");
      if (i.contains("method")) c.sysid.integrator.method = parse_integrator(i.at("method").get<std::string>());
      if (i.contains("substeps")) c.sysid.integrator.substeps = i.at("substeps").get<int>();
    }
  }
  if (j.contains("closed_loop")) {
    const Json& l = j.at("closed_loop");
    if (l.contains("steps")) c.closed_loop.steps = l.at("steps").get<int>();
    if (l.contains("reference")) c.closed_loop.reference = number_from_json(l.at("reference"));
  }
}

void apply_active_flags(ActiveConfig& a, const Flags& f) {
  if (f.n_initial) a.n_initial = *f.n_initial;
  if (f.max_steps) a.max_steps = *f.max_steps;
  if (f.err_threshold) a.err_threshold = *f.err_threshold;
  if (f.gamma) a.train.gamma = *f.gamma;
  if (f.nu) a.train.nu = *f.nu;
  if (f.budget_global) a.global.max_evals = *f.budget_global;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError(p.string(), "cannot read");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json parse_json_file(const fs::path& p) {
  try {
    return Json::parse(read_file(p));
  } catch (const Json::exception& e) {
    throw ConfigError("config", p.string() + ": " + e.what());
  }
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError(p.string(), "cannot write");
  out << content;
  if (!out) throw IoError(p.string(), "write failed");
}

int default_threads() {
  if (const char* env = std::getenv("WCREG_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw ConfigError("WCREG_THREADS", "expected a positive integer, got '" + std::string(env) + "'");
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

int default_resolution(Index dim) {
  switch (dim) {
    case 1: return 1001;
    case 2: return 101;
    case 3: return 21;
    case 4: return 11;
    default: return 5;
  }
}

/// Registry defaults, then the config file, then flags.
RunConfig resolve(const std::string& command, const Flags& f, const Problem& p) {
  RunConfig c;
  c.command = command;
  c.problem = p.key;
  c.active = p.active;
  c.seed = p.active.seed;
  c.bound_form = p.bound_form;
  c.bounds = p.bounds;
  c.delta = p.delta;
  c.sign_eta = p.sign_eta;
  c.epsilon_f = p.epsilon_f;
  c.sysid = p.sysid;
  c.threads = default_threads();
  c.grid_resolution = default_resolution(p.box.dim());
  if (!f.config.empty()) {
    Json j = parse_json_file(f.config);
    // A manifest from an earlier run is accepted as a config.
    if (j.contains("config")) j = j.at("config");
    if (j.contains("problem") && j.at("problem").get<std::string>() != p.key)
      throw ConfigError("config", "file is for problem '" + j.at("problem").get<std::string>() + "', not '" + p.key + "'");
    apply_file(c, j);
  }
  if (f.seed) c.seed = *f.seed;
  if (f.threads) c.threads = *f.threads;
  if (f.resolution) c.grid_resolution = *f.resolution;
  if (f.family) c.family = *f.family;
  if (f.form) c.bound_form = parse_bound_form(*f.form);
  apply_active_flags(c.active, f);
  apply_active_flags(c.sysid.active, f);
  c.active.seed = c.seed;
  c.sysid.active.seed = c.seed;
  if (c.threads < 1) throw ConfigError("threads", "must be at least 1");
  if (c.closed_loop.steps < 1) throw ConfigError("closed_loop.steps", "must be at least 1");
  c.active.validate();
  c.sysid.active.validate();
  return c;
}

struct Output {
  fs::path dir;
  Json report;
  std::string history;
  std::string grid;
  std::vector<std::pair<std::string, std::string>> extra;
  bool threshold_failed = false;
};

void write_outputs(const Output& o, const RunConfig& c, double wall_seconds) {
  fs::create_directories(o.dir);
  Json report = o.report;
  report["wall_seconds"] = wall_seconds;
  write_file(o.dir / "report.json", report.dump(2) + "\n");
  if (!o.history.empty()) write_file(o.dir / "history.csv", o.history);
  if (!o.grid.empty()) write_file(o.dir / "grid.csv", o.grid);
  for (const auto& [name, content] : o.extra) write_file(o.dir / name, content);
  const Json manifest{{"tool", "wcreg"}, {"version", kToolVersion}, {"command", c.command}, {"config", to_json(c)}};
  write_file(o.dir / "manifest.json", manifest.dump(2) + "\n");
}

Json report_header(const RunConfig& c, const Problem& p) {
  return Json{{"command", c.command}, {"problem", p.key}, {"kind", problem_kind_name(p.kind)}, {"seed", c.seed}};
}

const ModelSpec& pick_family(const Problem& p, int index) {
  if (index == 0) return p.family;
  if (index < 0 || index > static_cast<int>(p.alt_families.size()))
    throw ConfigError("family", "index " + std::to_string(index) + " out of range for '" + p.key + "'");
  return p.alt_families[index - 1];
}

void require_kind(const Problem& p, const std::string& command, std::initializer_list<ProblemKind> kinds) {
  for (ProblemKind k : kinds)
    if (p.kind == k) return;
  throw ConfigError(command, "problem '" + p.key + "' is of kind " + problem_kind_name(p.kind));
}

BoundFn signed_bounds(const BoundsReport& r) {
  return [r](const VectorXd& x) {
    const auto [lo, hi] = bound_at(r, x);
    return std::pair{-lo, hi};
  };
}

/// Fit stage shared by fit, bounds, mpqp and mpc.
FitReport run_fit(const Problem& p, const RunConfig& c, const Model& model, Output& o) {
  const FitReport fit = fit_worst_case(p.f, model, p.box, c.active);
  o.report["model"] = wcreg::to_json(model.spec());
  o.report["fit"] = wcreg::to_json(fit);
  o.history = history_csv(fit);
  o.threshold_failed = !(fit.certified_wce() <= c.active.err_threshold);
  return fit;
}

void cmd_fit(const Problem& p, const RunConfig& c, Output& o) {
  require_kind(p, "fit", {ProblemKind::kRegression, ProblemKind::kMpqp, ProblemKind::kMpc});
  const Model model(pick_family(p, c.family));
  const FitReport fit = run_fit(p, c, model, o);
  o.grid = grid_csv(p.f, model, fit.theta_star.values, p.box, c.grid_resolution);
}

void cmd_bounds(const Problem& p, const RunConfig& c, Output& o) {
  require_kind(p, "bounds", {ProblemKind::kRegression, ProblemKind::kMpqp, ProblemKind::kMpc});
  const Model model(pick_family(p, c.family));
  const FitReport fit = run_fit(p, c, model, o);
  const BoundsReport br = certify_bounds(p.f, model, fit.theta_star.values, fit.certified_wce(), fit.dataset_final,
                                         p.box, c.bound_form, p.envelope, c.bounds);
  o.report["bounds"] = wcreg::to_json(br);
  o.grid = grid_csv(p.f, model, fit.theta_star.values, p.box, c.grid_resolution, signed_bounds(br));
}

void cmd_certify_set(const Problem& p, const RunConfig& c, Output& o) {
  require_kind(p, "certify-set", {ProblemKind::kConstraintSet});
  auto model = std::make_shared<const Model>(pick_family(p, c.family));
  const FitReport fit = fit_sign_surrogate(p.f, *model, p.box, c.sign_eta, c.active);
  const ConstraintCert cert =
      make_certificate(p.f, model, fit.theta_star.values, p.box, c.delta, c.epsilon_f, c.sign_eta);
  const MatrixXd points = grid_sample(p.box, std::min(c.grid_resolution, 200));
  const CertificateCheck check = check_certificate(p.f, cert, points);
  o.report["model"] = wcreg::to_json(model->spec());
  o.report["fit"] = wcreg::to_json(fit);
  o.report["certificate"] = wcreg::to_json(cert);
  o.report["convex_form"] = wcreg::to_json(polyhedral_form(cert));
  o.report["grid_check"] = Json{{"points", check.points},
                                {"violations", check.violations},
                                {"conservativeness", number_json(check.conservativeness)},
                                {"sign_agreement", number_json(check.sign_agreement)}};
  o.history = history_csv(fit);
  o.grid = grid_csv(p.f, *model, fit.theta_star.values, p.box, c.grid_resolution);
  o.threshold_failed = !std::isfinite(cert.delta_f) || check.violations > 0;
}

void cmd_sysid(const Problem& p, const RunConfig& c, Output& o) {
  require_kind(p, "sysid", {ProblemKind::kSystemId});
  const OdeModel& ode = *p.ode;
  const std::vector<ModelSpec> families(ode.n_state, pick_family(p, c.family));
  const UncertainModel um = learn_uncertain_model(ode, p.box, p.Ts, families, {}, c.sysid);
  o.report["uncertain_model"] = wcreg::to_json(um);

  std::string history = csv_row({"component", "iteration", "n_samples", "error", "train_loss", "direct_evals",
                                 "failed", "wall_seconds"});
  for (std::size_t j = 0; j < um.states.size(); ++j)
    for (const auto& it : um.states[j].fit.iterations)
      history += csv_row({"xi" + std::to_string(j + 1), std::to_string(it.iteration), std::to_string(it.n_samples),
                          format_double(it.error), format_double(it.train_loss), std::to_string(it.direct_evals),
                          it.failed ? "1" : "0", format_double(it.wall_seconds)});
  o.history = history;

  // Plot data for the first state component; the rollout covers all of them.
  const Index ns = ode.n_state;
  const ScalarField next_xi1 = [&](const VectorXd& x) {
    return integrate_step(ode, x.head(ns), x.tail(ode.n_input), p.Ts, c.sysid.integrator.method,
                          c.sysid.integrator.substeps)[0];
  };
  const LearnedComponent& first = um.states.front();
  const BoundFn bounds = [&first](const VectorXd&) { return std::pair{-first.lower, first.upper}; };
  o.grid = grid_csv(next_xi1, *first.model, first.theta.values, p.box, c.grid_resolution, bounds);

  const int steps = c.closed_loop.steps;
  MatrixXd inputs(steps, ode.n_input);
  for (int t = 0; t < steps; ++t)
    for (Index i = 0; i < ode.n_input; ++i)
      inputs(t, i) = 0.25 * p.box.upper[ns + i] * std::sin(0.3 * t + static_cast<double>(i));
  const VectorXd xi0 = 0.25 * p.box.upper.head(ns);
  o.extra.emplace_back("rollout.csv", rollout_csv(um, ode, xi0, inputs));

  for (const auto& comp : um.states)
    if (!(comp.wce <= c.sysid.active.err_threshold)) o.threshold_failed = true;
}

void cmd_mpqp(const Problem& p, const RunConfig& c, Output& o) {
  require_kind(p, "mpqp", {ProblemKind::kMpqp, ProblemKind::kMpc});
  const MpQp& qp = *p.qp;
  const CriticalRegion cr = cr0(qp);
  o.report["mpqp"] = Json{{"n_z", qp.n_z()},
                          {"n_x", qp.n_x()},
                          {"n_constraints", qp.n_constraints()},
                          {"cr0_rows", cr.H.rows()},
                          {"cr0_minimal_rows", cr.H_min.rows()},
                          {"problem", wcreg::to_json(qp)}};
  const Model model(pick_family(p, c.family));
  const FitReport fit = run_fit(p, c, model, o);
  o.grid = grid_csv(p.f, model, fit.theta_star.values, p.box, c.grid_resolution);
}

void cmd_mpc(const Problem& p, const RunConfig& c, Output& o) {
  require_kind(p, "mpc", {ProblemKind::kMpc});
  const MpcSpec& spec = *p.mpc;
  const MpQp& qp = *p.qp;
  const Model model(pick_family(p, c.family));
  const FitReport fit = run_fit(p, c, model, o);
  const VectorXd theta = fit.theta_star.values;
  o.report["mpc"] = wcreg::to_json(spec);

  const Controller exact = exact_mpc_controller(qp, spec.n_u());
  const Index steps = c.closed_loop.steps;
  MatrixXd u_exact(steps, spec.n_u()), u_approx(steps, spec.n_u());
  Index t = 0, inside = 0;
  const Controller approx = [&](const VectorXd& x) {
    const VectorXd ue = exact(x);
    const VectorXd ua = VectorXd::Constant(1, model.eval(theta, x));
    if (t < steps) {
      u_exact.row(t) = ue.transpose();
      u_approx.row(t) = ua.transpose();
      if (p.box.contains(x, 1e-12)) ++inside;
    }
    ++t;
    return ua;
  };
  const Reference reference = [&](int) { return VectorXd::Constant(spec.n_tau(), c.closed_loop.reference); };
  const Trajectory tr = simulate_closed_loop(spec, approx, VectorXd::Zero(spec.n_xi()), reference,
                                             static_cast<int>(steps), VectorXd::Zero(spec.n_u()));
  const double max_gap = (u_exact - u_approx).cwiseAbs().maxCoeff();
  o.report["closed_loop"] = Json{{"steps", steps},
                                 {"reference", number_json(c.closed_loop.reference)},
                                 {"max_abs_u_gap", number_json(max_gap)},
                                 {"certified_wce", number_json(fit.certified_wce())},
                                 {"steps_inside_region", inside}};
  o.grid = grid_csv(p.f, model, theta, p.box, c.grid_resolution);
  o.extra.emplace_back("trajectory.csv", trajectory_csv(tr, &u_exact, &u_approx));
}

/// Re-evaluates a fitted model from an earlier report on a new grid.
ExitCode cmd_export_grid(const Flags& f) {
  const fs::path out_dir = f.out;
  fs::create_directories(out_dir);
  if (f.report.empty()) throw ConfigError("export-grid", "--report is required");
  fs::path report_path = f.report;
  if (fs::is_directory(report_path)) report_path /= "report.json";
  const Json report = parse_json_file(report_path);
  if (!report.contains("model") || !report.contains("fit"))
    throw ConfigError("export-grid", report_path.string() + " holds no fitted scalar model");
  const Problem p = make_problem(report.at("problem").get<std::string>());
  const Model model(model_spec_from_json(report.at("model")));
  const ParamVec theta = param_vec_from_json(report.at("fit").at("theta_star"));
  const int resolution = f.resolution.value_or(default_resolution(p.box.dim()));
  BoundFn bounds;
  if (report.contains("bounds")) bounds = signed_bounds(bounds_report_from_json(report.at("bounds")));
  try {
    write_file(out_dir / "grid.csv", grid_csv(p.f, model, theta.values, p.box, resolution, bounds));
  } catch (const ConfigError&) {
    write_file(out_dir / "grid.csv", grid_csv_header(p.box.dim()));
    throw;
  }
  return ExitCode::kOk;
}

ExitCode list_problems() {
  for (const auto& key : problem_keys()) {
    const Problem p = make_problem(key);
    std::cout << key << " [" << problem_kind_name(p.kind) << "]\n  " << p.description << "\n";
  }
  return ExitCode::kOk;
}

void add_run_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--problem", f.problem, "Registry key (see list-problems)")->required();
  sub->add_option("--config", f.config, "JSON config file; flags take precedence");
  sub->add_option("--seed", f.seed, "Random seed");
  sub->add_option("--out", f.out, "Output directory")->capture_default_str();
  sub->add_option("--threads", f.threads, "Worker threads (default: WCREG_THREADS or all cores)");
  sub->add_option("--n-initial", f.n_initial, "Initial design size N0");
  sub->add_option("--max-steps", f.max_steps, "Active-learning iterations M");
  sub->add_option("--err-threshold", f.err_threshold, "Target certified worst-case error");
  sub->add_option("--gamma", f.gamma, "Smooth max sharpness");
  sub->add_option("--nu", f.nu, "Weight of the mean-squared term");
  sub->add_option("--budget-global", f.budget_global, "DIRECT evaluations per acquisition");
  sub->add_option("--resolution", f.resolution, "Grid points per dimension in grid.csv");
  sub->add_option("--family", f.family, "Surrogate family: 0 is the default, 1.. the alternatives");
  sub->add_option("--form", f.form, "Bound form for the bounds command: const-sym, const-asym, input-sym, input-asym");
}

ExitCode run(const std::string& command, const Flags& f) {
  const Problem p = make_problem(f.problem);
  const RunConfig c = resolve(command, f, p);
  set_thread_count(static_cast<std::size_t>(c.threads));
  Output o;
  o.dir = f.out;
  o.report = report_header(c, p);
  const auto start = std::chrono::steady_clock::now();
  if (command == "fit") cmd_fit(p, c, o);
  else if (command == "bounds") cmd_bounds(p, c, o);
  else if (command == "certify-set") cmd_certify_set(p, c, o);
  else if (command == "sysid") cmd_sysid(p, c, o);
  else if (command == "mpqp") cmd_mpqp(p, c, o);
  else if (command == "mpc") cmd_mpc(p, c, o);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.report["threshold_met"] = !o.threshold_failed;
  write_outputs(o, c, wall);
  std::cout << command << " " << p.key << ": wrote " << (o.dir / "report.json").string() << "\n";
  if (o.threshold_failed) {
    std::cerr << "certification threshold not met\n";
    return ExitCode::kThreshold;
  }
  return ExitCode::kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Worst-case error regression: fit, certify and export benchmark surrogates"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  Flags flags;
  std::string chosen;

  const std::vector<std::pair<std::string, std::string>> runs = {
      {"fit", "Active-learning minimax fit with certified worst-case error"},
      {"bounds", "Fit, then certify (input-dependent) error bounds"},
      {"certify-set", "Certified convex inner approximation of a constraint set"},
      {"sysid", "Learn a one-step model with certified disturbance intervals"},
      {"mpqp", "Gated surrogate of an mpQP solution"},
      {"mpc", "Gated MPC surrogate and a closed-loop comparison with the exact controller"}};
  for (const auto& [name, help] : runs) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_run_flags(sub, flags);
    sub->callback([&chosen, n = name] { chosen = n; });
  }
  CLI::App* grid = app.add_subcommand("export-grid", "Evaluate a fitted model from report.json on a grid");
  grid->add_option("--report", flags.report, "report.json or the directory holding it")->required();
  grid->add_option("--resolution", flags.resolution, "Grid points per dimension");
  grid->add_option("--out", flags.out, "Output directory")->capture_default_str();
  grid->callback([&chosen] { chosen = "export-grid"; });
  app.add_subcommand("list-problems", "Print registry keys and descriptions")->callback([&chosen] {
    chosen = "list-problems";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kError);
  }

  try {
    ExitCode code;
    if (chosen == "list-problems") code = list_problems();
    else if (chosen == "export-grid") code = cmd_export_grid(flags);
    else code = run(chosen, flags);
    return static_cast<int>(code);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
  } catch (const DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << "\n";
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
  } catch (const Json::exception& e) {
    std::cerr << "malformed json: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return static_cast<int>(ExitCode::kError);
}
