#include "wcreg/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "wcreg/error.hpp"

namespace wcreg {

std::string sampler_name(Sampler s) {
  switch (s) {
    case Sampler::kLhs: return "lhs";
    case Sampler::kGrid: return "grid";
    case Sampler::kUniform: return "uniform";
  }
  return "lhs";
}

Sampler parse_sampler(const std::string& s) {
  if (s == "lhs") return Sampler::kLhs;
  if (s == "grid") return Sampler::kGrid;
  if (s == "uniform") return Sampler::kUniform;
  throw ConfigError("sampler", "unknown sampler '" + s + "'");
}

Eigen::MatrixXd lhs_sample(const Box& box, Eigen::Index N, std::uint64_t seed) {
  if (N < 1) throw ConfigError("lhs_sample", "N must be at least 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const Eigen::Index n = box.dim();
  Eigen::MatrixXd X(n, N);
  std::vector<Eigen::Index> perm(N);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (Eigen::Index k = 0; k < N; ++k) {
      const double t = (static_cast<double>(perm[k]) + u01(rng)) / static_cast<double>(N);
      X(i, k) = std::min(box.lower[i] + t * (box.upper[i] - box.lower[i]), box.upper[i]);
    }
  }
  return X;
}

Eigen::MatrixXd grid_sample(const Box& box, Eigen::Index points_per_dim) {
  if (points_per_dim < 2) throw ConfigError("grid_sample", "need at least 2 points per dimension");
  const Eigen::Index n = box.dim();
  double total = std::pow(static_cast<double>(points_per_dim), static_cast<double>(n));
  if (total > 1e8) throw ConfigError("grid_sample", "grid too large");
  const auto N = static_cast<Eigen::Index>(total);
  Eigen::MatrixXd X(n, N);
  std::vector<Eigen::Index> idx(n, 0);
  for (Eigen::Index k = 0; k < N; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = static_cast<double>(idx[i]) / static_cast<double>(points_per_dim - 1);
      X(i, k) = idx[i] + 1 == points_per_dim ? box.upper[i] : box.lower[i] + t * (box.upper[i] - box.lower[i]);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (++idx[i] < points_per_dim) break;
      idx[i] = 0;
    }
  }
  return X;
}

Eigen::MatrixXd uniform_sample(const Box& box, Eigen::Index N, std::uint64_t seed) {
  if (N < 1) throw ConfigError("uniform_sample", "N must be at least 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Eigen::MatrixXd X(box.dim(), N);
  for (Eigen::Index k = 0; k < N; ++k)
    for (Eigen::Index i = 0; i < box.dim(); ++i) X(i, k) = box.lower[i] + u01(rng) * (box.upper[i] - box.lower[i]);
  return X;
}

Eigen::MatrixXd initial_design(Sampler s, const Box& box, Eigen::Index N, std::uint64_t seed) {
  switch (s) {
    case Sampler::kLhs: return lhs_sample(box, N, seed);
    case Sampler::kUniform: return uniform_sample(box, N, seed);
    case Sampler::kGrid: {
      const double n = static_cast<double>(box.dim());
      auto k = static_cast<Eigen::Index>(std::floor(std::pow(static_cast<double>(N), 1.0 / n) + 1e-9));
      return grid_sample(box, std::max<Eigen::Index>(k, 2));
    }
  }
  throw ConfigError("sampler", "unknown sampler");
}

}  // namespace wcreg
