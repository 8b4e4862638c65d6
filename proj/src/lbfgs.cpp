#include "wcreg/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <optional>

#include "wcreg/error.hpp"
#include "wcreg/parallel.hpp"

namespace wcreg {

void LbfgsConfig::validate() const {
  if (memory < 1) throw ConfigError("LbfgsConfig", "memory must be at least 1");
  if (!(0.0 < c1 && c1 < c2 && c2 < 1.0)) throw ConfigError("LbfgsConfig", "need 0 < c1 < c2 < 1");
  if (max_iters < 0) throw ConfigError("LbfgsConfig", "max_iters must be nonnegative");
  if (max_line_search < 1) throw ConfigError("LbfgsConfig", "max_line_search must be at least 1");
  if (n_starts < 1) throw ConfigError("LbfgsConfig", "n_starts must be at least 1");
}

std::string status_name(LbfgsStatus s) {
  switch (s) {
    case LbfgsStatus::kConverged: return "converged";
    case LbfgsStatus::kMaxIters: return "max_iters";
    case LbfgsStatus::kLineSearchFailed: return "line_search_failed";
  }
  return "unknown";
}

namespace {

struct Trial {
  double alpha = 0.0;
  double phi = 0.0;
  double dphi = 0.0;
  Eigen::VectorXd x, g;
};

// Minimizer of the cubic through (a, fa, ga) and (b, fb, gb), or the bisection
// point when the cubic is degenerate; clamped away from the interval ends.
double interpolate(double a, double fa, double ga, double b, double fb, double gb) {
  const double lo = std::min(a, b), hi = std::max(a, b);
  const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - ga * gb;
  double t = 0.5 * (a + b);
  if (disc >= 0.0 && std::isfinite(d1)) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = gb - ga + 2.0 * d2;
    if (denom != 0.0) {
      const double c = b - (b - a) * (gb + d2 - d1) / denom;
      if (std::isfinite(c)) t = c;
    }
  }
  const double margin = 0.1 * (hi - lo);
  return std::clamp(t, lo + margin, hi - margin);
}

class LineSearch {
 public:
  LineSearch(const Objective& f, const LbfgsConfig& cfg, int& evals) : f_(f), cfg_(cfg), evals_(evals) {}

  // Strong-Wolfe search along d from x (value phi0, gradient g0).
  std::optional<Trial> run(const Eigen::VectorXd& x, double phi0, const Eigen::VectorXd& g0,
                           const Eigen::VectorXd& d, double alpha0) {
    x_ = &x;
    d_ = &d;
    phi0_ = phi0;
    dphi0_ = g0.dot(d);
    budget_ = cfg_.max_line_search;
    if (!(dphi0_ < 0.0)) return std::nullopt;

    Trial prev{0.0, phi0, dphi0_, x, g0};
    double alpha = alpha0;
    for (int i = 0; budget_ > 0; ++i) {
      Trial cur = eval(alpha);
      if (!std::isfinite(cur.phi) || cur.phi > phi0_ + cfg_.c1 * alpha * dphi0_ || (i > 0 && cur.phi >= prev.phi))
        return zoom(prev, cur);
      if (std::abs(cur.dphi) <= -cfg_.c2 * dphi0_) return cur;
      if (cur.dphi >= 0.0) return zoom(cur, prev);
      prev = std::move(cur);
      alpha *= 2.0;
    }
    return std::nullopt;
  }

 private:
  Trial eval(double alpha) {
    --budget_;
    ++evals_;
    Trial t;
    t.alpha = alpha;
    t.x = *x_ + alpha * *d_;
    t.g = Eigen::VectorXd::Zero(t.x.size());
    try {
      t.phi = f_(t.x, t.g);
    } catch (const NumericError&) {
      t.phi = std::numeric_limits<double>::infinity();
    }
    t.dphi = std::isfinite(t.phi) && t.g.allFinite() ? t.g.dot(*d_) : std::numeric_limits<double>::quiet_NaN();
    if (!t.g.allFinite()) t.phi = std::numeric_limits<double>::infinity();
    return t;
  }

  std::optional<Trial> zoom(Trial lo, Trial hi) {
    while (budget_ > 0) {
      double alpha;
      if (std::isfinite(hi.phi) && std::isfinite(hi.dphi))
        alpha = interpolate(lo.alpha, lo.phi, lo.dphi, hi.alpha, hi.phi, hi.dphi);
      else
        alpha = 0.5 * (lo.alpha + hi.alpha);
      if (std::abs(hi.alpha - lo.alpha) <= 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
      Trial cur = eval(alpha);
      if (!std::isfinite(cur.phi) || cur.phi > phi0_ + cfg_.c1 * alpha * dphi0_ || cur.phi >= lo.phi) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.dphi) <= -cfg_.c2 * dphi0_) return cur;
        if (cur.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = std::move(cur);
      }
    }
    return std::nullopt;
  }

  const Objective& f_;
  const LbfgsConfig& cfg_;
  int& evals_;
  const Eigen::VectorXd* x_ = nullptr;
  const Eigen::VectorXd* d_ = nullptr;
  double phi0_ = 0.0, dphi0_ = 0.0;
  int budget_ = 0;
};

}  // namespace

LbfgsResult minimize(const Objective& objective, Eigen::VectorXd x0, const LbfgsConfig& cfg) {
  cfg.validate();
  LbfgsResult res;
  res.x = std::move(x0);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(res.x.size());
  res.value = objective(res.x, g);
  res.evaluations = 1;
  if (!std::isfinite(res.value) || !g.allFinite())
    throw NumericError("lbfgs", "objective is not finite at the initial point");
  res.values.push_back(res.value);

  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;  // (s, y)
  LineSearch ls(objective, cfg, res.evaluations);
  bool restarted = false;

  for (res.iterations = 0; res.iterations < cfg.max_iters;) {
    if (g.lpNorm<Eigen::Infinity>() <= cfg.grad_tol) {
      res.status = LbfgsStatus::kConverged;
      return res;
    }

    // Two-loop recursion.
    Eigen::VectorXd q = g;
    std::vector<double> a(pairs.size());
    for (std::size_t i = pairs.size(); i-- > 0;) {
      const auto& [s, y] = pairs[i];
      a[i] = s.dot(q) / y.dot(s);
      q -= a[i] * y;
    }
    if (!pairs.empty()) {
      const auto& [s, y] = pairs.back();
      q *= s.dot(y) / y.dot(y);
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& [s, y] = pairs[i];
      const double b = y.dot(q) / y.dot(s);
      q += (a[i] - b) * s;
    }
    Eigen::VectorXd d = -q;
    if (!(g.dot(d) < 0.0)) {
      pairs.clear();
      d = -g;
    }
    const double alpha0 = pairs.empty() ? std::min(1.0, 1.0 / std::max(g.lpNorm<Eigen::Infinity>(), 1e-300)) : 1.0;

    auto step = ls.run(res.x, res.value, g, d, alpha0);
    if (!step) {
      if (restarted || pairs.empty()) {
        res.status = LbfgsStatus::kLineSearchFailed;
        return res;
      }
      // Retry once along steepest descent with a fresh memory.
      restarted = true;
      pairs.clear();
      continue;
    }
    restarted = false;
    ++res.iterations;

    Eigen::VectorXd s = step->x - res.x;
    Eigen::VectorXd y = step->g - g;
    const double prev_value = res.value;
    if (cfg.record_trace) res.trace.push_back({step->alpha, res.value, g.dot(d), step->phi, step->dphi});
    res.x = std::move(step->x);
    g = std::move(step->g);
    res.value = step->phi;
    res.values.push_back(res.value);

    // Curvature condition; a failing pair is dropped.
    if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      pairs.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(pairs.size()) > cfg.memory) pairs.pop_front();
    }

    if (cfg.rel_tol > 0.0 && prev_value - res.value <= cfg.rel_tol * std::max(1.0, std::abs(prev_value))) {
      res.status = LbfgsStatus::kConverged;
      return res;
    }
  }
  res.status = g.lpNorm<Eigen::Infinity>() <= cfg.grad_tol ? LbfgsStatus::kConverged : LbfgsStatus::kMaxIters;
  return res;
}

LbfgsResult multistart_minimize(const Objective& objective, const InitSampler& init, const LbfgsConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.n_starts);
  std::vector<std::optional<LbfgsResult>> runs(n);
  std::vector<std::string> failures(n);

  parallel_for(n, [&](std::size_t i) {
    std::seed_seq seq{static_cast<std::uint64_t>(cfg.seed), static_cast<std::uint64_t>(i),
                      static_cast<std::uint64_t>(0x5eed)};
    std::mt19937_64 rng(seq);
    try {
      Eigen::VectorXd x0 = init(static_cast<int>(i), rng);
      LbfgsResult r = minimize(objective, std::move(x0), cfg);
      r.start_index = static_cast<int>(i);
      runs[i] = std::move(r);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < n; ++i) {
    if (!runs[i] || !std::isfinite(runs[i]->value)) continue;
    if (!best || runs[i]->value < runs[*best]->value) best = i;
  }
  if (!best) {
    std::string msg = "all " + std::to_string(n) + " starts failed:";
    for (std::size_t i = 0; i < n; ++i) msg += " [" + std::to_string(i) + "] " + failures[i];
    throw Error("multistart", msg);
  }
  return std::move(*runs[*best]);
}

}  // namespace wcreg
