#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spdectl/brownian.hpp"
#include "spdectl/ensemble.hpp"
#include "spdectl/generator.hpp"
#include "spdectl/linear.hpp"
#include "spdectl/picard.hpp"

namespace spdectl {

/// Raised when a control value leaves the admissible interval.
class AdmissibilityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Diffusivities a1(u), a2(u) driven by a scalar control u in [u_min, u_max].
struct ControlledMaterialLaw {
  std::function<double(double)> a1_of_u, a2_of_u, da1_du, da2_du;
  double rho1 = 1.0, rho2 = 1.0;
  double u_min = 0.0, u_max = 1.0;

  /// a_i(u) = c_i + s_i u.
  static ControlledMaterialLaw affine(double c1, double s1, double c2, double s2, double rho1,
                                      double rho2, double u_min, double u_max);

  bool admissible(double u) const { return u >= u_min && u <= u_max; }
  void require_admissible(double u) const;
  double project(double u) const { return u < u_min ? u_min : (u > u_max ? u_max : u); }
  /// Throws std::invalid_argument if a_i <= 0 somewhere on a sample of U or the
  /// derivative accessors disagree with central differences.
  void validate(std::size_t samples = 17) const;
};

/// Piecewise-constant control, u[k] acting on [t_k, t_{k+1}).
struct ControlTrajectory {
  std::vector<double> u;

  static ControlTrajectory constant(std::size_t nt, double value) {
    return {std::vector<double>(nt, value)};
  }
  std::size_t size() const { return u.size(); }
  double operator[](std::size_t k) const { return u[k]; }
  double& operator[](std::size_t k) { return u[k]; }
  ControlTrajectory projected(const ControlledMaterialLaw& law) const;
};

/// J(u) = E[ int int f rho dx dt + int g rho dx ] over the cost domain.
struct CostSpec {
  std::function<double(double t, double x, double y, double u)> f, f_y, f_u;
  std::function<double(double y)> g, g_y;
  double domain_lo = -1.0, domain_hi = 1.0;

  /// Throws std::invalid_argument if declared partials disagree with central
  /// differences at sampled points.
  void validate(const SpaceTimeGrid& grid, double u_lo, double u_hi) const;
};

/// Everything a controlled forward solve needs, with the Brownian bundle frozen.
struct ControlProblem {
  ControlledMaterialLaw law;
  CoefficientSpec coeffs;
  CostSpec cost;
  InitialCondition ic;
  SpaceTimeGrid grid;
  BrownianPaths paths;
  Execution exec = Execution::parallel;
};

DiscreteGenerator controlled_generator(const ControlledMaterialLaw& law, double u,
                                       const SpaceTimeGrid& grid);
/// Derivative of the discrete generator in u (face coefficients da/du rho).
DiscreteGenerator controlled_generator_derivative(const ControlledMaterialLaw& law, double u,
                                                  const SpaceTimeGrid& grid);
std::vector<double> generator_u_derivative(const ControlledMaterialLaw& law, double u,
                                           std::span<const double> y_slice,
                                           const SpaceTimeGrid& grid);

/// Explicit Euler-Maruyama on the controlled generator,
///   Y_{k+1} = Y_k + dt (A_{u_k} Y_k + b) + sigma dB_k,
/// with zero-flux walls. Throws std::invalid_argument when dt exceeds the
/// explicit stability limit for some u_k.
StateField forward(const ControlProblem& problem, const ControlTrajectory& u);

/// Cost of each path (fields from forward()).
std::vector<double> path_costs(const ControlProblem& problem, const ControlTrajectory& u,
                               const StateField& Y);
Estimate cost_eval(const ControlProblem& problem, const ControlTrajectory& u);

/// H = p (A_u y + b) + q sigma + f.
double hamiltonian(double t, double x, double AuY, double y, double u, double p, double q,
                   const CoefficientSpec& coeffs, const CostSpec& cost);

/// Per time step and node: cross-path regression diagnostics of the adjoint sweep.
struct RegressionDiagnostics {
  double intercept = 0.0, slope = 0.0;
  double se_intercept = 0.0, se_slope = 0.0;
  /// Standard errors including the error carried over from later steps.
  double se_intercept_total = 0.0, se_slope_total = 0.0;
  double q = 0.0, q_se = 0.0, q_se_total = 0.0;
  bool fallback = false;  ///< regressor constant across paths; plain average used
};

/// p on [path][time k = 0..nt][node]; q on [time k = 0..nt-1][node] (shared by
/// all paths). p is the adjoint density with respect to rho dx: its pairing
/// with a state variation uses the generator cell masses.
struct AdjointField {
  std::size_t n_paths = 0, n_times = 0, nx = 0;
  std::vector<double> p;
  std::vector<double> q;
  std::vector<RegressionDiagnostics> diagnostics;  // [k][j], k = 0..nt-1

  double p_at(std::size_t path, std::size_t k, std::size_t j) const {
    return p[(path * n_times + k) * nx + j];
  }
  double q_at(std::size_t k, std::size_t j) const { return q[k * nx + j]; }
  const RegressionDiagnostics& diag(std::size_t k, std::size_t j) const {
    return diagnostics[k * nx + j];
  }
};

/// Backward sweep of the discrete adjoint: p_N = chi g_y(Y_N) and
///   p_k = E_k[p_{k+1} + dt (A_{u_k}^* p_{k+1} + b_y p_{k+1} + chi f_y)] + dt sigma_y q_k,
///   q_k = Cov(p_{k+1}, dB_k) / dt,
/// where chi is the cost-domain indicator and E_k is least squares on {1, B(t_k)}.
AdjointField adjoint_solve(const ControlProblem& problem, const ControlTrajectory& u,
                           const StateField& Y);

/// Gateaux derivative Z of the state in direction beta; Z_0 = 0.
StateField variation_solve(const ControlProblem& problem, const ControlTrajectory& u,
                           std::span<const double> beta, const StateField& Y);

/// g_k with dJ/da = sum_k g_k beta_k dt.
std::vector<double> smp_gradient(const ControlProblem& problem, const ControlTrajectory& u,
                                 const StateField& Y, const AdjointField& adj);
/// Per-path values whose mean is smp_gradient.
std::vector<double> smp_gradient_paths(const ControlProblem& problem, const ControlTrajectory& u,
                                       const StateField& Y, const AdjointField& adj);

/// Directional derivative estimates of J at u along beta, mean and standard error.
Estimate directional_adjoint(const ControlProblem& problem, const ControlTrajectory& u,
                             std::span<const double> beta);
Estimate directional_variation(const ControlProblem& problem, const ControlTrajectory& u,
                               std::span<const double> beta);
/// Central differences (J(u + a beta) - J(u - a beta)) / (2a) on common paths.
Estimate directional_fd(const ControlProblem& problem, const ControlTrajectory& u,
                        std::span<const double> beta, double a = 1e-3);

struct OptimizerOptions {
  double eta0 = 0.1;
  double armijo_c = 1e-4;
  double gtol = 1e-4;
  std::size_t max_outer = 100;
  std::size_t max_backtracks = 30;
  /// Optimize over constant trajectories only.
  bool constant_control = false;
};

struct DescentRecord {
  std::size_t iter = 0;
  double J = 0.0, J_stderr = 0.0;
  double grad_inf_norm = 0.0;  ///< sup-norm of u - P(u - g)
  double step = 0.0;           ///< accepted step length (0 for the final record)
};

struct OptimizeResult {
  ControlTrajectory u;
  std::vector<DescentRecord> trace;
  std::vector<double> gradient;  ///< gradient at the returned control
  bool converged = false;
  bool line_search_failed = false;
};

/// Projected gradient descent u <- P_U(u - eta g) with Armijo backtracking on
/// the Monte Carlo cost of the frozen path bundle.
OptimizeResult optimize(const ControlProblem& problem, const ControlTrajectory& u0,
                        const OptimizerOptions& opts = {});

}  // namespace spdectl
