#include "spdectl/linear.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spdectl {

InitialCondition InitialCondition::zero() { return {[](double) { return 0.0; }, 0.0}; }

InitialCondition InitialCondition::constant(double value) {
  return {[value](double) { return value; }, std::abs(value)};
}

InitialCondition InitialCondition::bump(double center, double width, double height) {
  if (!(width > 0.0)) throw std::invalid_argument("bump width must be > 0");
  return {[=](double x) {
            const double s = (x - center) / width;
            return height * std::exp(-0.5 * s * s);
          },
          std::abs(height)};
}

std::vector<double> InitialCondition::sample(const SpaceTimeGrid& grid) const {
  std::vector<double> v(grid.nx());
  for (std::size_t j = 0; j < grid.nx(); ++j) {
    v[j] = xi(grid.x(j));
    if (!std::isfinite(v[j]) || std::abs(v[j]) > bound * (1.0 + 1e-12)) {
      throw std::invalid_argument("initial condition exceeds its declared bound at x = " +
                                  format_double(grid.x(j)));
    }
  }
  return v;
}

LinearSolver::LinearSolver(const CompositeMedium& medium, const InitialCondition& ic,
                           double sigma0, const SpaceTimeGrid& grid, double tau_min_ratio)
    : sigma0_(sigma0), nx_(grid.nx()), nt_(grid.nt()) {
  if (!std::isfinite(sigma0)) throw std::invalid_argument("sigma0 must be finite");
  const std::vector<double> xi = ic.sample(grid);
  const double tau_min = tau_min_ratio * grid.dt();
  det_.assign((nt_ + 1) * nx_, 0.0);
  mass_.assign(nt_ * nx_, 0.0);
  std::copy(xi.begin(), xi.end(), det_.begin());
  for (std::size_t k = 1; k <= nt_; ++k) {
    const GreenOperator K(medium, grid, grid.t(k), tau_min);
    K.apply(xi, std::span<double>(det_.data() + k * nx_, nx_));
    for (std::size_t i = 0; i < nx_; ++i) mass_[(k - 1) * nx_ + i] = K.row_mass(i);
  }
}

void LinearSolver::path(std::span<const double> dB, std::span<double> out) const {
  if (dB.size() != nt_ || out.size() != (nt_ + 1) * nx_) {
    throw std::invalid_argument("LinearSolver::path: size mismatch");
  }
  std::copy(det_.begin(), det_.end(), out.begin());
  for (std::size_t k = 1; k <= nt_; ++k) {
    double* y = out.data() + k * nx_;
    for (std::size_t m = 0; m < k; ++m) {
      const double w = sigma0_ * dB[m];
      const double* mass = mass_.data() + (k - m - 1) * nx_;
      for (std::size_t i = 0; i < nx_; ++i) y[i] += w * mass[i];
    }
  }
}

void solve_linear(const CompositeMedium& medium, const InitialCondition& ic, double sigma0,
                  const SpaceTimeGrid& grid, const BrownianPaths& paths, Execution exec,
                  const PathSink& sink) {
  if (paths.nt() != grid.nt() || std::abs(paths.dt() - grid.dt()) > 1e-14 * grid.dt()) {
    throw std::invalid_argument("Brownian paths do not match the time grid");
  }
  const LinearSolver solver(medium, ic, sigma0, grid);
  const std::size_t size = grid.field_size();
  run_paths(
      paths.n_paths(), exec,
      [&](std::size_t p) {
        std::vector<double> field(size);
        solver.path(paths.increments(p), field);
        return field;
      },
      [&](std::size_t p, std::vector<double>&& field) { sink(p, field); });
}

StateField solve_linear(const CompositeMedium& medium, const InitialCondition& ic, double sigma0,
                        const SpaceTimeGrid& grid, const BrownianPaths& paths, Execution exec) {
  StateField out(paths.n_paths(), grid, paths.master_seed(), "linear");
  solve_linear(medium, ic, sigma0, grid, paths, exec,
               [&](std::size_t p, std::span<const double> field) {
                 std::copy(field.begin(), field.end(), out.path(p).begin());
               });
  return out;
}

namespace {

double mass_at(const CompositeMedium& medium, double tau, double x, double tau_min) {
  return tau < tau_min ? 1.0 : green_mass(medium, tau, x);
}

double check_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("time must be >= 0");
  return t;
}

}  // namespace

double second_moment_linear(const CompositeMedium& medium, const InitialCondition& ic,
                            double sigma0, double t, double x, const MomentQuadrature& q) {
  check_time(t);
  const double d = t < q.tau_min ? ic.xi(x) : green_integral(medium, t, x, ic.xi);
  return d * d + covariance_linear(medium, sigma0, t, t, x, q);
}

double covariance_linear(const CompositeMedium& medium, double sigma0, double t, double s,
                         double x, const MomentQuadrature& q) {
  check_time(t);
  check_time(s);
  const double upper = std::min(t, s);
  if (upper == 0.0 || q.n_u == 0) return 0.0;
  const double du = upper / static_cast<double>(q.n_u);
  double sum = 0.0;
  for (std::size_t i = 0; i < q.n_u; ++i) {
    const double u = (static_cast<double>(i) + 0.5) * du;
    sum += mass_at(medium, t - u, x, q.tau_min) * mass_at(medium, s - u, x, q.tau_min);
  }
  return sigma0 * sigma0 * sum * du;
}

}  // namespace spdectl
