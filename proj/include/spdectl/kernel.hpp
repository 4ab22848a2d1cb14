#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "spdectl/grid.hpp"
#include "spdectl/medium.hpp"

namespace spdectl {

/// Constants of the Gaussian upper bound on the fundamental solution.
struct KernelBounds {
  double c_lambda;  ///< (1 + |lambda|) (a1^{-1/2} + a2^{-1/2})
  double c_diff;    ///< min(1/a1, 1/a2)
  double c1;        ///< c_lambda * sqrt(c_diff)
};

KernelBounds gaussian_bound_constants(const CompositeMedium& medium);

/// Right-hand side of the Gaussian domination bound,
/// c_lambda / sqrt(2 pi tau) * exp(-(x - z)^2 / (2 c_diff tau)).
double gaussian_bound(const CompositeMedium& medium, double tau, double x, double z);

/// Fundamental solution G(tau, x, z) of dY/dt = A Y on the real line: the
/// density in z of the state reached from x after elapsed time tau.
/// Throws std::domain_error when tau <= 0.
double green(const CompositeMedium& medium, double tau, double x, double z);

/// One-sided limits of G as z -> 0- and z -> 0+.
double green_left_limit(const CompositeMedium& medium, double tau, double x);
double green_right_limit(const CompositeMedium& medium, double tau, double x);

/// Half-width, in h-units, beyond which the kernel is dropped: 8 sqrt(tau).
inline constexpr double kTailWidthSigmas = 8.0;

/// Integral of G(tau, x, .) over the real line by adaptive Gauss-Kronrod
/// quadrature split at z = 0.
double green_mass(const CompositeMedium& medium, double tau, double x);

/// Integral of G(tau, x, z) f(z) over z for a callable f, split at 0.
template <class F>
double green_integral(const CompositeMedium& medium, double tau, double x, F&& f);

/// Linear map f -> (z -> integral of G(tau, x_i, z) f(z) dz) for grid
/// functions f. f is interpolated linearly between nodes and extended by its
/// end values outside the grid. Every grid cell is integrated by composite
/// Gauss-Legendre panels no wider than half the local kernel width, and the
/// kernel is truncated at |h(z) - h(x)| > 8 sqrt(tau). Below tau_min the
/// operator is the identity (linear interpolation at the targets).
class GreenOperator {
 public:
  /// Targets default to the grid nodes.
  GreenOperator(const CompositeMedium& medium, const SpaceTimeGrid& grid, double tau,
                double tau_min);
  GreenOperator(const CompositeMedium& medium, const SpaceTimeGrid& grid, double tau,
                double tau_min, std::span<const double> targets);

  std::size_t rows() const { return first_.size(); }
  bool is_identity() const { return identity_; }
  double tau() const { return tau_; }

  void apply(std::span<const double> f, std::span<double> out) const;
  std::vector<double> apply(std::span<const double> f) const;
  /// Applies the operator to `width` grid functions stored node-major,
  /// f[j * width + c], writing out[i * width + c].
  void apply_block(std::span<const double> f, std::size_t width, std::span<double> out) const;

  /// Sum of the weights in row i (the operator applied to f = 1).
  double row_mass(std::size_t i) const;
  /// Number of stored weights.
  std::size_t nonzeros() const { return weights_.size(); }

 private:
  void build_row(const CompositeMedium& medium, const SpaceTimeGrid& grid, double x,
                 std::vector<double>& row, std::size_t& first) const;

  double tau_;
  bool identity_;
  std::size_t nx_;
  std::vector<std::size_t> first_;   // first node index of row i
  std::vector<std::size_t> offset_;  // start of row i in weights_
  std::vector<double> weights_;
};

/// Convenience wrapper around GreenOperator; tau_min defaults to dt / 10.
std::vector<double> apply_green(const CompositeMedium& medium, double tau,
                                std::span<const double> x_targets, std::span<const double> f,
                                const SpaceTimeGrid& grid, double tau_min);
std::vector<double> apply_green(const CompositeMedium& medium, double tau,
                                std::span<const double> x_targets, std::span<const double> f,
                                const SpaceTimeGrid& grid);

}  // namespace spdectl

#include "spdectl/kernel_impl.hpp"
