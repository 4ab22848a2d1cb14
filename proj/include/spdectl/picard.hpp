#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "spdectl/brownian.hpp"
#include "spdectl/ensemble.hpp"
#include "spdectl/linear.hpp"

namespace spdectl {

/// Coefficient callable (t, x, y, u) -> value.
using Coefficient = std::function<double(double t, double x, double y, double u)>;

/// Drift b and volatility sigma with their partial derivatives and the declared
/// Lipschitz and linear-growth constants. Missing partials are treated as 0.
struct CoefficientSpec {
  Coefficient b, sigma;
  Coefficient b_y, b_u, sigma_y, sigma_u;
  double lip = 0.0;
  double growth = 0.0;

  /// b = b0 + b1 y, sigma = s0 + s1 y, with the tightest declared constants.
  static CoefficientSpec affine(double b0, double b1, double s0, double s1);
};

struct HypothesisCheck {
  double lip_ratio = 0.0;     ///< worst observed |f(y) - f(y')| / (lip |y - y'|)
  double growth_ratio = 0.0;  ///< worst observed |f| / (growth (1 + |y|))
  bool ok() const { return lip_ratio <= 1.0 + 1e-12 && growth_ratio <= 1.0 + 1e-12; }
};

/// Random spot checks of the Lipschitz and growth declarations for b and sigma
/// over t in [0, T], x in [x_min, x_max], |y| <= y_range.
HypothesisCheck check_hypotheses(const CoefficientSpec& coeffs, const SpaceTimeGrid& grid,
                                 std::uint64_t seed = 1, std::size_t samples = 2000,
                                 double y_range = 10.0);

struct PicardDiagnostics {
  std::size_t iterations = 0;         ///< first n with h_n <= tol
  std::vector<double> h;              ///< h_n = sup_{t,x} E|Y_{n+1} - Y_n|^2, n = 0, 1, ...
  std::vector<double> second_moment;  ///< sup_{t,x} E|Y_n|^2, n = 0, 1, ...
  std::size_t max_path_sweeps = 0;    ///< most Picard maps applied to any single path
  bool converged = false;
};

class PicardNonConvergence : public std::runtime_error {
 public:
  PicardNonConvergence(const std::string& what, PicardDiagnostics diag)
      : std::runtime_error(what), diagnostics(std::move(diag)) {}
  PicardDiagnostics diagnostics;
};

struct PicardOptions {
  double tol = 1e-6;
  std::size_t max_iter = 25;
  double tau_min_ratio = 0.1;
  /// A path stops iterating once its own sup |Y_{n+1} - Y_n|^2 <= tol * path_floor.
  double path_floor = 1e-2;
};

struct PicardResult {
  StateField field;
  PicardDiagnostics diagnostics;
};

/// Picard iteration of the mild-solution map on a frozen Brownian bundle.
/// The map is pathwise, so every path is iterated independently and the
/// contraction metric h_n is assembled across paths afterwards. Throws
/// PicardNonConvergence when no h_n with n < max_iter reaches tol.
PicardResult picard_solve(const CompositeMedium& medium, const CoefficientSpec& coeffs,
                          const InitialCondition& ic, const SpaceTimeGrid& grid,
                          const BrownianPaths& paths, const PicardOptions& opts = {},
                          Execution exec = Execution::parallel);
PicardDiagnostics picard_solve(const CompositeMedium& medium, const CoefficientSpec& coeffs,
                               const InitialCondition& ic, const SpaceTimeGrid& grid,
                               const BrownianPaths& paths, const PicardOptions& opts,
                               Execution exec, const PathSink& sink);

/// Semi-implicit Euler-Maruyama on the discrete generator with zero-flux walls:
/// Y_{k+1} = (I - dt L)^{-1} (Y_k + dt b(Y_k) + sigma(Y_k) dB_k).
StateField euler_oracle(const CompositeMedium& medium, const CoefficientSpec& coeffs,
                        const InitialCondition& ic, const SpaceTimeGrid& grid,
                        const BrownianPaths& paths, Execution exec = Execution::parallel);
void euler_oracle(const CompositeMedium& medium, const CoefficientSpec& coeffs,
                  const InitialCondition& ic, const SpaceTimeGrid& grid,
                  const BrownianPaths& paths, Execution exec, const PathSink& sink);

}  // namespace spdectl
