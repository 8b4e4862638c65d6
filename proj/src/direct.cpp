#include "wcreg/direct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "wcreg/error.hpp"
#include "wcreg/parallel.hpp"

namespace wcreg {

int DirectConfig::budget_for(Eigen::Index n_free) const {
  return max_evals > 0 ? max_evals : static_cast<int>(2000 * std::max<Eigen::Index>(n_free, 1));
}

void DirectConfig::validate() const {
  if (max_evals < 0) throw ConfigError("DirectConfig", "max_evals must be nonnegative");
  if (!(epsilon >= 0.0)) throw ConfigError("DirectConfig", "epsilon must be nonnegative");
  if (max_iters < 1) throw ConfigError("DirectConfig", "max_iters must be positive");
}

namespace {

constexpr int kMaxLevel = 30;

struct Rect {
  Eigen::VectorXd center;  // unit-cube coordinates over free dims
  Eigen::VectorXi level;   // side length 3^-level per free dim
  double value;            // minimized quantity (negated objective); NaN if non-finite
  double size;             // center-to-vertex distance
};

double rect_size(const Eigen::VectorXi& level) {
  std::vector<int> l(level.data(), level.data() + level.size());
  std::sort(l.begin(), l.end());
  double s = 0.0;
  for (int li : l) s += std::pow(9.0, -li);
  return 0.5 * std::sqrt(s);
}

class Search {
 public:
  Search(const ScalarField& f, const Box& box, const DirectConfig& cfg) : f_(f), box_(box), cfg_(cfg) {
    for (Eigen::Index i = 0; i < box.dim(); ++i)
      if (box.upper[i] > box.lower[i]) free_.push_back(i);
  }

  GlobalResult run() {
    cfg_.validate();
    const int budget = cfg_.budget_for(static_cast<Eigen::Index>(free_.size()));
    if (free_.empty()) {
      std::vector<Eigen::VectorXd> pts{Eigen::VectorXd::Zero(0)};
      record(pts, evaluate(pts));
      res_.x_star = to_box(pts[0]);
      finish();
      return res_;
    }

    const auto n = static_cast<Eigen::Index>(free_.size());
    const int reserve = cfg_.local_polish ? std::min(2 * static_cast<int>(n) * cfg_.polish_steps, budget / 5) : 0;
    const int direct_budget = std::max(1, budget - reserve);

    {
      std::vector<Eigen::VectorXd> pts{Eigen::VectorXd::Constant(n, 0.5)};
      const auto vals = evaluate(pts);
      record(pts, vals);
      rects_.push_back({pts[0], Eigen::VectorXi::Zero(n), vals[0], rect_size(Eigen::VectorXi::Zero(n))});
      best_rect_ = 0;
    }

    for (res_.iterations = 0; res_.iterations < cfg_.max_iters; ++res_.iterations) {
      std::vector<std::size_t> chosen = potentially_optimal();
      if (chosen.empty()) break;

      // Probe points for every chosen rectangle that fits the remaining budget.
      std::vector<std::size_t> batch;
      std::vector<std::vector<Eigen::Index>> dims;
      std::vector<Eigen::VectorXd> pts;
      for (std::size_t r : chosen) {
        const Rect& rect = rects_[r];
        const int lmin = rect.level.minCoeff();
        std::vector<Eigen::Index> I;
        for (Eigen::Index i = 0; i < n; ++i)
          if (rect.level[i] == lmin) I.push_back(i);
        if (res_.evals_used + static_cast<int>(pts.size() + 2 * I.size()) > direct_budget) break;
        const double delta = std::pow(3.0, -(lmin + 1));
        for (auto i : I) {
          Eigen::VectorXd p = rect.center, m = rect.center;
          p[i] += delta;
          m[i] -= delta;
          pts.push_back(std::move(p));
          pts.push_back(std::move(m));
        }
        batch.push_back(r);
        dims.push_back(std::move(I));
      }
      if (batch.empty()) break;

      const auto vals = evaluate(pts);
      record(pts, vals);

      std::size_t offset = 0;
      for (std::size_t b = 0; b < batch.size(); ++b) {
        divide(batch[b], dims[b], pts, vals, offset);
        offset += 2 * dims[b].size();
      }
    }

    if (cfg_.local_polish) polish(budget);
    res_.x_star = have_best_ ? to_box(best_center_) : box_.center();
    finish();
    return res_;
  }

 private:
  Eigen::VectorXd to_box(const Eigen::VectorXd& u) const {
    Eigen::VectorXd x = box_.lower;
    for (std::size_t j = 0; j < free_.size(); ++j) {
      const Eigen::Index i = free_[j];
      x[i] = std::clamp(box_.lower[i] + (box_.upper[i] - box_.lower[i]) * u[static_cast<Eigen::Index>(j)],
                        box_.lower[i], box_.upper[i]);
    }
    return x;
  }

  // Negated objective values; NaN marks a non-finite objective.
  std::vector<double> evaluate(const std::vector<Eigen::VectorXd>& pts) {
    std::vector<double> out(pts.size());
    parallel_for(pts.size(), [&](std::size_t i) {
      const double v = f_(to_box(pts[i]));
      out[i] = std::isfinite(v) ? -v : std::numeric_limits<double>::quiet_NaN();
    });
    return out;
  }

  void record(const std::vector<Eigen::VectorXd>& pts, const std::vector<double>& vals) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      ++res_.evals_used;
      if (std::isnan(vals[i])) {
        ++res_.nonfinite_evals;
        continue;
      }
      worst_ = std::max(worst_, vals[i]);
      if (!have_best_ || vals[i] < best_value_) {
        have_best_ = true;
        best_value_ = vals[i];
        best_center_ = pts[i];
        res_.history.emplace_back(res_.evals_used, -best_value_);
      }
    }
  }

  double effective(const Rect& r) const {
    if (!std::isnan(r.value)) return r.value;
    return have_best_ ? worst_ : 0.0;
  }

  std::vector<std::size_t> potentially_optimal() const {
    // Best rectangle of every size class (earliest created on ties).
    std::vector<std::size_t> reps;
    {
      std::vector<std::size_t> order(rects_.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (rects_[a].size != rects_[b].size) return rects_[a].size < rects_[b].size;
        return effective(rects_[a]) < effective(rects_[b]);
      });
      for (std::size_t k = 0; k < order.size(); ++k) {
        const Rect& r = rects_[order[k]];
        if (r.level.minCoeff() >= kMaxLevel) continue;
        if (!reps.empty() && rects_[reps.back()].size == r.size) continue;
        reps.push_back(order[k]);
      }
    }
    if (reps.empty()) return {};

    // Start from the smallest value, preferring the larger rectangle on ties.
    std::size_t start = 0;
    for (std::size_t k = 1; k < reps.size(); ++k)
      if (effective(rects_[reps[k]]) <= effective(rects_[reps[start]])) start = k;

    std::vector<std::size_t> hull;
    for (std::size_t k = start; k < reps.size(); ++k) {
      const Rect& p = rects_[reps[k]];
      while (hull.size() >= 2) {
        const Rect& a = rects_[hull[hull.size() - 2]];
        const Rect& b = rects_[hull.back()];
        const double cross = (b.size - a.size) * (effective(p) - effective(a)) -
                             (effective(b) - effective(a)) * (p.size - a.size);
        if (cross <= 0.0)
          hull.pop_back();
        else
          break;
      }
      hull.push_back(reps[k]);
    }

    const double fmin = best_value_;
    const double target = fmin - cfg_.epsilon * std::abs(fmin);
    std::vector<std::size_t> chosen;
    for (std::size_t h = 0; h < hull.size(); ++h) {
      const Rect& r = rects_[hull[h]];
      if (h + 1 < hull.size()) {
        const Rect& nx = rects_[hull[h + 1]];
        const double K = (effective(nx) - effective(r)) / (nx.size - r.size);
        if (effective(r) - K * r.size > target + 1e-15 * std::max(1.0, std::abs(target))) continue;
      }
      chosen.push_back(hull[h]);
    }
    return chosen;
  }

  void divide(std::size_t r, const std::vector<Eigen::Index>& I, const std::vector<Eigen::VectorXd>& pts,
              const std::vector<double>& vals, std::size_t offset) {
    auto score = [&](std::size_t j) {
      const double a = vals[offset + 2 * j], b = vals[offset + 2 * j + 1];
      const double fill = have_best_ ? worst_ : 0.0;
      const double wa = std::isnan(a) ? fill : a, wb = std::isnan(b) ? fill : b;
      return std::min(wa, wb);
    };
    std::vector<std::size_t> order(I.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score(a) < score(b); });

    for (std::size_t j : order) {
      rects_[r].level[I[j]] += 1;
      const Eigen::VectorXi lev = rects_[r].level;
      const double sz = rect_size(lev);
      for (int s = 0; s < 2; ++s) {
        const std::size_t idx = offset + 2 * j + static_cast<std::size_t>(s);
        rects_.push_back({pts[idx], lev, vals[idx], sz});
      }
    }
    rects_[r].size = rect_size(rects_[r].level);
  }

  // Shrinking coordinate search around the incumbent within the leftover budget.
  void polish(int budget) {
    if (!have_best_) return;
    const auto n = static_cast<Eigen::Index>(free_.size());
    double step = 0.0;
    for (const Rect& r : rects_)
      if (!std::isnan(r.value) && r.value == best_value_ && r.center == best_center_) {
        step = std::pow(3.0, -r.level.minCoeff()) / 3.0;
        break;
      }
    if (step == 0.0) step = 1.0 / 81.0;

    for (int it = 0; it < cfg_.polish_steps; ++it) {
      bool improved = false;
      for (Eigen::Index i = 0; i < n; ++i) {
        for (double sgn : {1.0, -1.0}) {
          if (res_.evals_used >= budget) return;
          Eigen::VectorXd cand = best_center_;
          cand[i] = std::clamp(cand[i] + sgn * step, 0.0, 1.0);
          if (cand[i] == best_center_[i]) continue;
          std::vector<Eigen::VectorXd> pts{cand};
          const double before = best_value_;
          record(pts, evaluate(pts));
          if (best_value_ < before) {
            improved = true;
            break;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
  }

  void finish() {
    if (!have_best_) {
      res_.value_star = -std::numeric_limits<double>::infinity();
      if (res_.x_star.size() == 0) res_.x_star = box_.center();
    } else {
      res_.value_star = -best_value_;
      if (free_.empty()) res_.x_star = box_.lower;
    }
  }

  const ScalarField& f_;
  const Box& box_;
  DirectConfig cfg_;
  std::vector<Eigen::Index> free_;
  std::vector<Rect> rects_;
  std::size_t best_rect_ = 0;
  bool have_best_ = false;
  double best_value_ = std::numeric_limits<double>::infinity();
  double worst_ = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_center_;
  GlobalResult res_;
};

}  // namespace

GlobalResult maximize(const ScalarField& objective, const Box& box, const DirectConfig& cfg) {
  return Search(objective, box, cfg).run();
}

GlobalResult minimize_global(const ScalarField& objective, const Box& box, const DirectConfig& cfg) {
  GlobalResult r = maximize([&](const Eigen::VectorXd& x) { return -objective(x); }, box, cfg);
  r.value_star = -r.value_star;
  for (auto& h : r.history) h.second = -h.second;
  return r;
}

}  // namespace wcreg
