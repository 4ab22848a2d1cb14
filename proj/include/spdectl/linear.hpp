#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spdectl/brownian.hpp"
#include "spdectl/ensemble.hpp"
#include "spdectl/grid.hpp"
#include "spdectl/kernel.hpp"
#include "spdectl/medium.hpp"

namespace spdectl {

/// Deterministic, bounded initial state.
struct InitialCondition {
  std::function<double(double)> xi;
  double bound = 0.0;  ///< declared sup-norm bound M

  static InitialCondition zero();
  static InitialCondition constant(double value);
  /// height * exp(-(x - center)^2 / (2 width^2))
  static InitialCondition bump(double center, double width, double height = 1.0);

  /// Node values; throws std::invalid_argument if |xi| exceeds the bound.
  std::vector<double> sample(const SpaceTimeGrid& grid) const;
};

/// Full space-time field for a bundle of paths, laid out [path][time][node].
struct StateField {
  std::size_t n_paths = 0, n_times = 0, nx = 0;
  std::vector<double> values;
  std::uint64_t seed = 0;
  std::string solver;

  StateField() = default;
  StateField(std::size_t paths, const SpaceTimeGrid& grid, std::uint64_t seed_, std::string solver_)
      : n_paths(paths), n_times(grid.nt() + 1), nx(grid.nx()),
        values(paths * (grid.nt() + 1) * grid.nx(), 0.0), seed(seed_), solver(std::move(solver_)) {}

  std::size_t path_size() const { return n_times * nx; }
  std::span<double> path(std::size_t p) { return {values.data() + p * path_size(), path_size()}; }
  std::span<const double> path(std::size_t p) const {
    return {values.data() + p * path_size(), path_size()};
  }
  std::span<double> slice(std::size_t p, std::size_t k) {
    return {values.data() + p * path_size() + k * nx, nx};
  }
  std::span<const double> slice(std::size_t p, std::size_t k) const {
    return {values.data() + p * path_size() + k * nx, nx};
  }
  double at(std::size_t p, std::size_t k, std::size_t j) const {
    return values[p * path_size() + k * nx + j];
  }
};

/// Receives one path's field ([time][node]) at a time, in path order.
using PathSink = std::function<void(std::size_t path, std::span<const double> field)>;

/// Mild solution with b = 0 and sigma = sigma0:
///   Y(t_k, x) = (K(t_k) xi)(x) + sigma0 sum_{m<k} (K(t_k - t_m) 1)(x) dB_m.
class LinearSolver {
 public:
  LinearSolver(const CompositeMedium& medium, const InitialCondition& ic, double sigma0,
               const SpaceTimeGrid& grid, double tau_min_ratio = 0.1);

  /// Writes the field of one path into out (size (nt + 1) * nx).
  void path(std::span<const double> increments, std::span<double> out) const;

  const std::vector<double>& deterministic() const { return det_; }
  /// Spatial mass of the kernel after elapsed time j dt at every node, j = 1..nt.
  std::span<const double> noise_mass(std::size_t j) const {
    return {mass_.data() + (j - 1) * nx_, nx_};
  }

 private:
  double sigma0_;
  std::size_t nx_, nt_;
  std::vector<double> det_;
  std::vector<double> mass_;
};

StateField solve_linear(const CompositeMedium& medium, const InitialCondition& ic, double sigma0,
                        const SpaceTimeGrid& grid, const BrownianPaths& paths,
                        Execution exec = Execution::parallel);
/// Streaming form for bundles too large to store.
void solve_linear(const CompositeMedium& medium, const InitialCondition& ic, double sigma0,
                  const SpaceTimeGrid& grid, const BrownianPaths& paths, Execution exec,
                  const PathSink& sink);

/// Midpoint rule in the elapsed time u; masses with t - u below tau_min count as 1.
struct MomentQuadrature {
  std::size_t n_u = 400;
  double tau_min = 1e-8;
};

/// E|Y(t, x)|^2 = D(t, x)^2 + sigma0^2 int_0^t (int G(t - u, x, z) dz)^2 du.
double second_moment_linear(const CompositeMedium& medium, const InitialCondition& ic,
                            double sigma0, double t, double x, const MomentQuadrature& q = {});

/// Cov(Y(t, x), Y(s, x)) for a zero initial condition.
double covariance_linear(const CompositeMedium& medium, double sigma0, double t, double s,
                         double x, const MomentQuadrature& q = {});

}  // namespace spdectl
