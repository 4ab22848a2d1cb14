#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "spdectl/medium.hpp"

namespace spdectl {

/// One row of the kernel/discretisation invariant report.
struct CheckResult {
  std::string name;
  std::string medium_id;
  double max_abs_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;  ///< free-form context, not written to the CSV
};

/// |int G(tau, x, z) dz - 1| over tau in {0.01, 0.1, 1, 5} and
/// x in {-3, -0.5, 0, 0.5, 3}.
CheckResult check_mass(const CompositeMedium& medium, const std::string& id, double tol = 1e-8);

/// Counts samples with G > c_lambda / sqrt(2 pi tau) exp(-(x - z)^2 / (2 c tau)),
/// c = min(1/a1, 1/a2). max_abs_error is the largest excess over the bound.
CheckResult check_gaussian_bound(const CompositeMedium& medium, const std::string& id,
                                 std::size_t samples = 10000, std::uint64_t seed = 20240611);
/// Same samples against the bound with the exponent -c (x - z)^2 / (2 tau).
CheckResult check_gaussian_bound_scaled(const CompositeMedium& medium, const std::string& id,
                                        std::size_t samples = 10000,
                                        std::uint64_t seed = 20240611);

/// G(tau, x, 0+) / G(tau, x, 0-) against rho2 / rho1, from the exact one-sided
/// values and from extrapolated values at z = +-eps.
CheckResult check_jump_ratio(const CompositeMedium& medium, const std::string& id,
                             double tol = 1e-9);

/// Continuity of a(z) dG/dz across z = 0 (source variable) and of
/// a(x) rho(x) dG/dx across x = 0 (target variable), with second-order
/// one-sided differences of step eps.
CheckResult check_flux(const CompositeMedium& medium, const std::string& id, double eps = 1e-5,
                       double tol = 1e-4);
/// The jump of a(z) rho(z) dG/dz across z = 0, reported for comparison.
CheckResult check_flux_source_density_weighted(const CompositeMedium& medium,
                                               const std::string& id, double eps = 1e-5,
                                               double tol = 1e-4);

/// Chapman-Kolmogorov residual on sampled (x, z, tau1, tau2).
CheckResult check_semigroup(const CompositeMedium& medium, const std::string& id,
                            std::size_t tuples = 20, double tol = 1e-6,
                            std::uint64_t seed = 7);

struct PairingStudy {
  std::vector<std::size_t> nx;
  std::vector<double> with_dirac, without_dirac;
  double min_order = 0.0;       ///< smallest observed order of the corrected defect
  double stagnation_ratio = 0.0;  ///< min over grids of without / with
};
PairingStudy pairing_study(const CompositeMedium& medium,
                           const std::vector<std::size_t>& nx = {201, 401, 801});
/// Order >= 1 for the corrected defect; for a1 rho1 != a2 rho2 also requires the
/// uncorrected defect to stay above 10x the corrected one.
CheckResult check_pairing(const CompositeMedium& medium, const std::string& id);

/// Discrete generator: annihilates constants, M L symmetric, rho-adjoint
/// consistent; GreenOperator reproduces constants.
CheckResult check_generator(const CompositeMedium& medium, const std::string& id);
CheckResult check_green_operator(const CompositeMedium& medium, const std::string& id);

/// The suite run by `verify-kernel`.
std::vector<CheckResult> kernel_check_suite(const CompositeMedium& medium, const std::string& id);

/// CSV `check_name,medium_id,max_abs_error,tolerance,pass`.
void write_checks_csv(std::ostream& os, const std::vector<CheckResult>& rows);

}  // namespace spdectl
