#include "spdectl/checks.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "spdectl/generator.hpp"
#include "spdectl/grid.hpp"
#include "spdectl/kernel.hpp"

namespace spdectl {

namespace {

CheckResult make(const std::string& name, const std::string& id, double err, double tol) {
  return {name, id, err, tol, err <= tol, {}};
}

// Second-order one-sided derivative of f at 0 from the side `dir` (+1 or -1),
// with f0 the one-sided limit.
template <class F>
double one_sided_derivative(F&& f, double f0, double eps, double dir) {
  return dir * (-3.0 * f0 + 4.0 * f(dir * eps) - f(2.0 * dir * eps)) / (2.0 * eps);
}

const double kFluxTaus[] = {0.05, 0.2, 1.0};
const double kFluxPoints[] = {-1.0, -0.3, 0.2, 0.8};

}  // namespace

CheckResult check_mass(const CompositeMedium& medium, const std::string& id, double tol) {
  double err = 0.0;
  for (double tau : {0.01, 0.1, 1.0, 5.0}) {
    for (double x : {-3.0, -0.5, 0.0, 0.5, 3.0}) {
      err = std::max(err, std::abs(green_mass(medium, tau, x) - 1.0));
    }
  }
  return make("kernel_mass", id, err, tol);
}

namespace {

template <class Bound>
CheckResult bound_check(const std::string& name, const CompositeMedium& medium,
                        const std::string& id, std::size_t samples, std::uint64_t seed,
                        Bound&& bound) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> log_tau(std::log(0.01), std::log(4.0));
  std::uniform_real_distribution<double> pos(-3.0, 3.0);
  std::size_t violations = 0;
  double excess = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double tau = std::exp(log_tau(rng));
    const double x = pos(rng), z = pos(rng);
    const double g = green(medium, tau, x, z);
    const double b = bound(tau, x, z);
    if (g > b * (1.0 + 1e-12)) {
      ++violations;
      excess = std::max(excess, g - b);
    }
  }
  CheckResult r = make(name, id, excess, 0.0);
  r.pass = violations == 0;
  r.detail = std::to_string(violations) + " of " + std::to_string(samples) + " samples above bound";
  return r;
}

}  // namespace

CheckResult check_gaussian_bound(const CompositeMedium& medium, const std::string& id,
                                 std::size_t samples, std::uint64_t seed) {
  return bound_check("gaussian_bound", medium, id, samples, seed,
                     [&](double tau, double x, double z) {
                       return gaussian_bound(medium, tau, x, z);
                     });
}

CheckResult check_gaussian_bound_scaled(const CompositeMedium& medium, const std::string& id,
                                        std::size_t samples, std::uint64_t seed) {
  const KernelBounds kb = gaussian_bound_constants(medium);
  return bound_check("gaussian_bound_scaled", medium, id, samples, seed,
                     [&](double tau, double x, double z) {
                       return kb.c_lambda / std::sqrt(2.0 * M_PI * tau) *
                              std::exp(-kb.c_diff * (x - z) * (x - z) / (2.0 * tau));
                     });
}

CheckResult check_jump_ratio(const CompositeMedium& medium, const std::string& id, double tol) {
  const double target = medium.rho2() / medium.rho1();
  const double eps = 1e-6;
  double err = 0.0, extrapolated_err = 0.0;
  for (double tau : kFluxTaus) {
    for (double x : kFluxPoints) {
      const double exact = green_right_limit(medium, tau, x) / green_left_limit(medium, tau, x);
      err = std::max(err, std::abs(exact - target));
      auto ratio = [&](double e) { return green(medium, tau, x, e) / green(medium, tau, x, -e); };
      const double r0 = (8.0 * ratio(0.25 * eps) - 6.0 * ratio(0.5 * eps) + ratio(eps)) / 3.0;
      extrapolated_err = std::max(extrapolated_err, std::abs(r0 - target));
    }
  }
  CheckResult r = make("interface_jump_ratio", id, std::max(err, extrapolated_err), tol);
  r.detail = "one-sided limits " + format_double(err) + ", extrapolated " +
             format_double(extrapolated_err);
  return r;
}

CheckResult check_flux(const CompositeMedium& medium, const std::string& id, double eps,
                       double tol) {
  double source_err = 0.0, target_err = 0.0;
  for (double tau : kFluxTaus) {
    for (double p : kFluxPoints) {
      // Source variable z at 0, target x = p.
      auto gz = [&](double z) { return green(medium, tau, p, z); };
      const double left = medium.a1() * one_sided_derivative(gz, green_left_limit(medium, tau, p),
                                                             eps, -1.0);
      const double right = medium.a2() * one_sided_derivative(gz, green_right_limit(medium, tau, p),
                                                              eps, 1.0);
      source_err = std::max(source_err, std::abs(right - left));
      // Target variable x at 0 (G is continuous in x), source z = p.
      auto gx = [&](double x) { return green(medium, tau, x, p); };
      const double g0 = green(medium, tau, 0.0, p);
      const double lx = medium.a1() * medium.rho1() * one_sided_derivative(gx, g0, eps, -1.0);
      const double rx = medium.a2() * medium.rho2() * one_sided_derivative(gx, g0, eps, 1.0);
      target_err = std::max(target_err, std::abs(rx - lx));
    }
  }
  CheckResult r = make("interface_flux", id, std::max(source_err, target_err), tol);
  r.detail = "a dG/dz jump " + format_double(source_err) + ", a rho dG/dx jump " +
             format_double(target_err);
  return r;
}

CheckResult check_flux_source_density_weighted(const CompositeMedium& medium,
                                               const std::string& id, double eps, double tol) {
  double err = 0.0;
  for (double tau : kFluxTaus) {
    for (double x : kFluxPoints) {
      auto gz = [&](double z) { return green(medium, tau, x, z); };
      const double left = medium.a1() * medium.rho1() *
                          one_sided_derivative(gz, green_left_limit(medium, tau, x), eps, -1.0);
      const double right = medium.a2() * medium.rho2() *
                           one_sided_derivative(gz, green_right_limit(medium, tau, x), eps, 1.0);
      err = std::max(err, std::abs(right - left));
    }
  }
  return make("interface_flux_a_rho_dz", id, err, tol);
}

CheckResult check_semigroup(const CompositeMedium& medium, const std::string& id,
                            std::size_t tuples, double tol, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-2.0, 2.0), tau(0.05, 1.0);
  double err = 0.0;
  for (std::size_t i = 0; i < tuples; ++i) {
    const double x = pos(rng), z = pos(rng), t1 = tau(rng), t2 = tau(rng);
    const double composed =
        green_integral(medium, t1, x, [&](double y) { return green(medium, t2, y, z); });
    err = std::max(err, std::abs(composed - green(medium, t1 + t2, x, z)));
  }
  return make("chapman_kolmogorov", id, err, tol);
}

PairingStudy pairing_study(const CompositeMedium& medium, const std::vector<std::size_t>& nx) {
  auto phi = [](double x) {
    const double s = (x - 0.4) / 1.5;
    return std::abs(s) < 1.0 ? std::pow(1.0 - s * s, 4) : 0.0;
  };
  auto phi_dx = [](double x) {
    const double s = (x - 0.4) / 1.5;
    return std::abs(s) < 1.0 ? -8.0 * s / 1.5 * std::pow(1.0 - s * s, 3) : 0.0;
  };
  auto Y = [](double x) { return std::exp(-2.0 * (x - 0.2) * (x - 0.2)) + 0.5; };
  PairingStudy st;
  st.nx = nx;
  for (std::size_t n : nx) {
    const SpaceTimeGrid grid(-3.0, 3.0, n, 1.0, 1);
    const GridFunction y = sample(grid, Y);
    const PairingDefect d = pairing_defect(medium, y.values, phi, phi_dx, grid);
    st.with_dirac.push_back(d.with_dirac);
    st.without_dirac.push_back(d.without_dirac);
  }
  st.min_order = INFINITY;
  st.stagnation_ratio = INFINITY;
  for (std::size_t i = 0; i < nx.size(); ++i) {
    st.stagnation_ratio = std::min(st.stagnation_ratio, st.without_dirac[i] / st.with_dirac[i]);
    if (i + 1 < nx.size()) {
      const double refine = static_cast<double>(nx[i + 1] - 1) / static_cast<double>(nx[i] - 1);
      st.min_order = std::min(
          st.min_order, std::log(st.with_dirac[i] / st.with_dirac[i + 1]) / std::log(refine));
    }
  }
  return st;
}

CheckResult check_pairing(const CompositeMedium& medium, const std::string& id) {
  const PairingStudy st = pairing_study(medium);
  const bool asymmetric = medium.a1() * medium.rho1() != medium.a2() * medium.rho2();
  CheckResult r = make("adjoint_pairing", id, st.with_dirac.back(), 1e-3);
  r.pass = st.min_order >= 1.0 && (!asymmetric || st.stagnation_ratio > 10.0);
  r.detail = "order " + format_double(st.min_order) + ", uncorrected/corrected " +
             format_double(st.stagnation_ratio);
  return r;
}

CheckResult check_generator(const CompositeMedium& medium, const std::string& id) {
  const SpaceTimeGrid grid(-2.0, 2.0, 41, 1.0, 1);
  const DiscreteGenerator gen = discrete_generator(medium, grid);
  const std::size_t n = gen.size();
  double scale = 0.0;
  for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(gen.op.diagonal(j)));
  const std::vector<double> ones(n, 1.0);
  double err = 0.0;
  for (double v : gen.apply(ones)) err = std::max(err, std::abs(v));
  // Symmetry of M L on the off-diagonals.
  for (std::size_t j = 0; j + 1 < n; ++j) {
    err = std::max(err, std::abs(gen.cell_mass[j] * gen.op.upper[j] -
                                 gen.cell_mass[j + 1] * gen.op.lower[j + 1]));
  }
  // <L f, g>_M = <f, L* g>_M for smooth f, g.
  std::vector<double> f(n), g(n);
  for (std::size_t j = 0; j < n; ++j) {
    f[j] = std::sin(grid.x(j));
    g[j] = std::cos(2.0 * grid.x(j)) + grid.x(j);
  }
  const std::vector<double> Lf = gen.apply(f);
  const std::vector<double> Lsg = gen.adjoint().apply(g);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    lhs += gen.cell_mass[j] * Lf[j] * g[j];
    rhs += gen.cell_mass[j] * f[j] * Lsg[j];
  }
  err = std::max(err, std::abs(lhs - rhs));
  return make("generator_structure", id, err / scale, 1e-12);
}

CheckResult check_green_operator(const CompositeMedium& medium, const std::string& id) {
  const SpaceTimeGrid grid(-4.0, 4.0, 81, 1.0, 10);
  double err = 0.0;
  for (double tau : {0.05, 0.5}) {
    const GreenOperator K(medium, grid, tau, grid.dt() / 10.0);
    const std::vector<double> ones(grid.nx(), 1.0);
    for (double v : K.apply(ones)) err = std::max(err, std::abs(v - 1.0));
  }
  return make("green_operator_constants", id, err, 1e-10);
}

std::vector<CheckResult> kernel_check_suite(const CompositeMedium& medium, const std::string& id) {
  return {check_mass(medium, id),         check_gaussian_bound(medium, id),
          check_jump_ratio(medium, id),   check_flux(medium, id),
          check_semigroup(medium, id),    check_pairing(medium, id),
          check_generator(medium, id),    check_green_operator(medium, id)};
}

void write_checks_csv(std::ostream& os, const std::vector<CheckResult>& rows) {
  os << "check_name,medium_id,max_abs_error,tolerance,pass\n";
  for (const CheckResult& r : rows) {
    os << r.name << ',' << r.medium_id << ',' << format_double(r.max_abs_error) << ','
       << format_double(r.tolerance) << ',' << (r.pass ? "pass" : "fail") << '\n';
  }
}

}  // namespace spdectl
