#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "spdectl/grid.hpp"
#include "spdectl/medium.hpp"

namespace spdectl {

/// Tridiagonal operator stored in flux form,
///   (L f)_j = lower_j (f_{j-1} - f_j) + upper_j (f_{j+1} - f_j) + shift_j f_j,
/// so that operators with zero row sums annihilate constants exactly.
struct TridiagonalOperator {
  std::vector<double> lower;  // lower[0] == 0
  std::vector<double> upper;  // upper[n-1] == 0
  std::vector<double> shift;  // zero for conservative operators

  std::size_t size() const { return lower.size(); }
  double diagonal(std::size_t j) const { return shift[j] - lower[j] - upper[j]; }

  void apply(std::span<const double> f, std::span<double> out) const;
  std::vector<double> apply(std::span<const double> f) const;
  /// out += scale * (L f)
  void apply_add(std::span<const double> f, double scale, std::span<double> out) const;
};

/// Finite-volume discretisation of (1 / (2 rho)) d/dx (a rho d/dx) on a grid.
/// Face coefficients kappa = a rho use the material on the side of the face
/// (harmonic mean for a face exactly at 0). Cell masses are the rho-weighted
/// trapezoid weights; the interface node gets the mean of rho1 and rho2 and the
/// end nodes half cells with zero-flux walls. M L is symmetric, where
/// M = diag(cell_mass).
struct DiscreteGenerator {
  TridiagonalOperator op;
  std::vector<double> cell_mass;

  std::size_t size() const { return op.size(); }
  void apply(std::span<const double> f, std::span<double> out) const { op.apply(f, out); }
  std::vector<double> apply(std::span<const double> f) const { return op.apply(f); }

  /// Adjoint with respect to the rho-weighted inner product, M^{-1} L^T M.
  TridiagonalOperator adjoint() const;
};

DiscreteGenerator discrete_generator(double a_left, double a_right, double rho_left,
                                     double rho_right, const SpaceTimeGrid& grid);
DiscreteGenerator discrete_generator(const CompositeMedium& medium, const SpaceTimeGrid& grid);

/// Derivative of the generator with respect to a control parameter when the
/// diffusivities move at rates da_left, da_right (cell masses unchanged).
DiscreteGenerator generator_derivative(double a_left, double a_right, double da_left,
                                       double da_right, double rho_left, double rho_right,
                                       const SpaceTimeGrid& grid);

/// Trapezoid weights of rho(x) dx over the grid nodes, with one-sided density
/// values on the two panels touching x = 0. Equal to cell_mass of the generator.
std::vector<double> rho_trapezoid_weights(double rho_left, double rho_right,
                                          const SpaceTimeGrid& grid);

/// Trapezoid weights of rho(x) dx restricted to [lo, hi] (both grid nodes).
std::vector<double> rho_trapezoid_weights(double rho_left, double rho_right,
                                          const SpaceTimeGrid& grid, double lo, double hi);

/// Precomputed solver for (I - dt L) y = r (Thomas algorithm).
class ImplicitStepSolver {
 public:
  ImplicitStepSolver(const TridiagonalOperator& op, double dt);
  void solve(std::span<const double> rhs, std::span<double> out) const;

 private:
  std::vector<double> sub_, diag_inv_, super_mod_;
};

struct PairingDefect {
  double with_dirac;     ///< |<AY, phi> - <Y, A* phi>| including the interface term
  double without_dirac;  ///< same pairing with the interface term omitted
  double dirac_term;     ///< (1/2) (a2 rho2 - a1 rho1) phi'(0) Y(0)
};

/// Discrete check of the adjoint pairing <A Y, phi>_rho = <Y, A* phi>_rho where
/// A* carries the Dirac term at the interface. phi must vanish on the two
/// outermost nodes at each end; otherwise std::invalid_argument.
PairingDefect pairing_defect(const CompositeMedium& medium, std::span<const double> Y,
                             const std::function<double(double)>& phi,
                             const std::function<double(double)>& phi_dx,
                             const SpaceTimeGrid& grid);

}  // namespace spdectl
