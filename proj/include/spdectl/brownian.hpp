#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spdectl/grid.hpp"

namespace spdectl {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

/// Standard normal keyed by (seed, path, step): pure and reproducible.
double keyed_normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step);

/// Brownian increments on the time grid, one row per path.
class BrownianPaths {
 public:
  BrownianPaths(std::uint64_t master_seed, std::size_t n_paths, std::size_t nt, double dt);

  std::uint64_t master_seed() const { return seed_; }
  std::size_t n_paths() const { return n_paths_; }
  std::size_t nt() const { return nt_; }
  double dt() const { return dt_; }

  double increment(std::size_t path, std::size_t step) const {
    return increments_[path * nt_ + step];
  }
  std::span<const double> increments(std::size_t path) const {
    return {increments_.data() + path * nt_, nt_};
  }
  /// B(t_k) on a path, k = 0..nt.
  double value(std::size_t path, std::size_t k) const;
  std::vector<double> values(std::size_t path) const;

 private:
  std::uint64_t seed_;
  std::size_t n_paths_, nt_;
  double dt_;
  std::vector<double> increments_;
};

/// Throws std::invalid_argument when n_paths == 0.
BrownianPaths sample_paths(std::uint64_t seed, const SpaceTimeGrid& grid, std::size_t n_paths);

}  // namespace spdectl
