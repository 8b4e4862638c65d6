#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "wcreg/box.hpp"

namespace wcreg {

enum class Sampler { kLhs, kGrid, kUniform };

std::string sampler_name(Sampler s);
Sampler parse_sampler(const std::string& s);

/// Latin hypercube design; returns points as columns (n x N).
Eigen::MatrixXd lhs_sample(const Box& box, Eigen::Index N, std::uint64_t seed);

/// Full tensor grid including the box endpoints; points_per_dim^n columns.
/// The first coordinate varies fastest.
Eigen::MatrixXd grid_sample(const Box& box, Eigen::Index points_per_dim);

Eigen::MatrixXd uniform_sample(const Box& box, Eigen::Index N, std::uint64_t seed);

/// Roughly N points from the chosen design. The grid uses the largest
/// per-dimension count k >= 2 with k^n <= max(N, 2^n), so it may return fewer.
Eigen::MatrixXd initial_design(Sampler s, const Box& box, Eigen::Index N, std::uint64_t seed);

}  // namespace wcreg
