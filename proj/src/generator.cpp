#include "spdectl/generator.hpp"

#include <cmath>
#include <stdexcept>

namespace spdectl {

namespace {

// Face coefficient rule shared by the generator and its control derivative.
struct FaceRule {
  double kappa_left, kappa_right;    // a rho on each side
  double dkappa_left, dkappa_right;  // derivative of a rho (derivative mode)
  bool derivative;

  double at(double x_face) const {
    if (x_face < 0.0) return derivative ? dkappa_left : kappa_left;
    if (x_face > 0.0) return derivative ? dkappa_right : kappa_right;
    const double s = kappa_left + kappa_right;
    if (!derivative) return 2.0 * kappa_left * kappa_right / s;
    return 2.0 * (kappa_right * kappa_right * dkappa_left + kappa_left * kappa_left * dkappa_right) /
           (s * s);
  }
};

DiscreteGenerator assemble(const FaceRule& rule, double rho_left, double rho_right,
                           const SpaceTimeGrid& grid) {
  const std::size_t n = grid.nx();
  const double dx = grid.dx();
  DiscreteGenerator gen;
  gen.cell_mass = rho_trapezoid_weights(rho_left, rho_right, grid);
  gen.op.lower.assign(n, 0.0);
  gen.op.upper.assign(n, 0.0);
  gen.op.shift.assign(n, 0.0);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double x_face = 0.5 * (grid.x(j) + grid.x(j + 1));
    const double flux = rule.at(x_face) / (2.0 * dx);
    gen.op.upper[j] = flux / gen.cell_mass[j];
    gen.op.lower[j + 1] = flux / gen.cell_mass[j + 1];
  }
  return gen;
}

void check_positive(double v, const char* name) {
  if (!(v > 0.0)) throw std::invalid_argument(std::string("generator: ") + name + " must be > 0");
}

}  // namespace

void TridiagonalOperator::apply(std::span<const double> f, std::span<double> out) const {
  const std::size_t n = size();
  if (f.size() != n || out.size() != n) throw std::invalid_argument("operator size mismatch");
  for (std::size_t j = 0; j < n; ++j) {
    double v = shift[j] * f[j];
    if (j > 0) v += lower[j] * (f[j - 1] - f[j]);
    if (j + 1 < n) v += upper[j] * (f[j + 1] - f[j]);
    out[j] = v;
  }
}

std::vector<double> TridiagonalOperator::apply(std::span<const double> f) const {
  std::vector<double> out(size());
  apply(f, out);
  return out;
}

void TridiagonalOperator::apply_add(std::span<const double> f, double scale,
                                    std::span<double> out) const {
  const std::size_t n = size();
  for (std::size_t j = 0; j < n; ++j) {
    double v = shift[j] * f[j];
    if (j > 0) v += lower[j] * (f[j - 1] - f[j]);
    if (j + 1 < n) v += upper[j] * (f[j + 1] - f[j]);
    out[j] += scale * v;
  }
}

TridiagonalOperator DiscreteGenerator::adjoint() const {
  const std::size_t n = size();
  const auto& m = cell_mass;
  TridiagonalOperator adj;
  adj.lower.assign(n, 0.0);
  adj.upper.assign(n, 0.0);
  adj.shift.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (j > 0) adj.lower[j] = op.upper[j - 1] * m[j - 1] / m[j];
    if (j + 1 < n) adj.upper[j] = op.lower[j + 1] * m[j + 1] / m[j];
    // Diagonal is preserved by the similarity transform.
    adj.shift[j] = op.diagonal(j) + adj.lower[j] + adj.upper[j];
  }
  return adj;
}

DiscreteGenerator discrete_generator(double a_left, double a_right, double rho_left,
                                     double rho_right, const SpaceTimeGrid& grid) {
  check_positive(a_left, "a_left");
  check_positive(a_right, "a_right");
  check_positive(rho_left, "rho_left");
  check_positive(rho_right, "rho_right");
  const FaceRule rule{a_left * rho_left, a_right * rho_right, 0.0, 0.0, false};
  return assemble(rule, rho_left, rho_right, grid);
}

DiscreteGenerator discrete_generator(const CompositeMedium& medium, const SpaceTimeGrid& grid) {
  return discrete_generator(medium.a1(), medium.a2(), medium.rho1(), medium.rho2(), grid);
}

DiscreteGenerator generator_derivative(double a_left, double a_right, double da_left,
                                       double da_right, double rho_left, double rho_right,
                                       const SpaceTimeGrid& grid) {
  check_positive(a_left, "a_left");
  check_positive(a_right, "a_right");
  const FaceRule rule{a_left * rho_left, a_right * rho_right, da_left * rho_left,
                      da_right * rho_right, true};
  return assemble(rule, rho_left, rho_right, grid);
}

std::vector<double> rho_trapezoid_weights(double rho_left, double rho_right,
                                          const SpaceTimeGrid& grid) {
  return rho_trapezoid_weights(rho_left, rho_right, grid, grid.x(0), grid.x(grid.nx() - 1));
}

std::vector<double> rho_trapezoid_weights(double rho_left, double rho_right,
                                          const SpaceTimeGrid& grid, double lo, double hi) {
  const std::size_t n = grid.nx();
  const std::size_t j_lo = grid.nearest_node(lo);
  const std::size_t j_hi = grid.nearest_node(hi);
  if (std::abs(grid.x(j_lo) - lo) > 1e-9 * grid.dx() ||
      std::abs(grid.x(j_hi) - hi) > 1e-9 * grid.dx() || j_hi <= j_lo) {
    throw std::invalid_argument("integration interval must span grid nodes");
  }
  std::vector<double> w(n, 0.0);
  const double half = 0.5 * grid.dx();
  for (std::size_t j = j_lo; j < j_hi; ++j) {
    // Panel [x_j, x_{j+1}] lies in a single material.
    const double mid = 0.5 * (grid.x(j) + grid.x(j + 1));
    const double rho = mid <= 0.0 ? rho_left : rho_right;
    w[j] += half * rho;
    w[j + 1] += half * rho;
  }
  return w;
}

ImplicitStepSolver::ImplicitStepSolver(const TridiagonalOperator& op, double dt) {
  const std::size_t n = op.size();
  sub_.assign(n, 0.0);
  diag_inv_.assign(n, 0.0);
  super_mod_.assign(n, 0.0);
  // Matrix I - dt L: sub = -dt lower, diag = 1 - dt diag(L), super = -dt upper.
  double prev_super = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double sub = -dt * op.lower[j];
    const double diag = 1.0 - dt * op.diagonal(j);
    const double denom = diag - sub * prev_super;
    if (denom == 0.0 || !std::isfinite(denom)) {
      throw std::runtime_error("implicit step matrix is singular");
    }
    sub_[j] = sub;
    diag_inv_[j] = 1.0 / denom;
    super_mod_[j] = -dt * op.upper[j] * diag_inv_[j];
    prev_super = super_mod_[j];
  }
}

void ImplicitStepSolver::solve(std::span<const double> rhs, std::span<double> out) const {
  const std::size_t n = sub_.size();
  double prev = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    prev = (rhs[j] - sub_[j] * prev) * diag_inv_[j];
    out[j] = prev;
  }
  for (std::size_t j = n - 1; j-- > 0;) out[j] -= super_mod_[j] * out[j + 1];
}

PairingDefect pairing_defect(const CompositeMedium& medium, std::span<const double> Y,
                             const std::function<double(double)>& phi,
                             const std::function<double(double)>& phi_dx,
                             const SpaceTimeGrid& grid) {
  const std::size_t n = grid.nx();
  if (Y.size() != n) throw std::invalid_argument("pairing_defect: Y has wrong length");
  for (std::size_t j : {std::size_t{0}, std::size_t{1}, n - 2, n - 1}) {
    if (phi(grid.x(j)) != 0.0) {
      throw std::invalid_argument("pairing_defect: phi support touches the grid boundary");
    }
  }
  const DiscreteGenerator gen = discrete_generator(medium, grid);
  const std::vector<double> AY = gen.apply(Y);

  double lhs = 0.0;
  for (std::size_t j = 0; j < n; ++j) lhs += gen.cell_mass[j] * AY[j] * phi(grid.x(j));

  // rho A phi = (a rho / 2) phi'' away from 0, with one-sided values per panel.
  auto second = [&](double x) {
    const double h = 1e-4;
    return (phi_dx(x + h) - phi_dx(x - h)) / (2.0 * h);
  };
  const double k1 = medium.a1() * medium.rho1();
  const double k2 = medium.a2() * medium.rho2();
  double rhs = 0.0;
  const double half = 0.5 * grid.dx();
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double xa = grid.x(j), xb = grid.x(j + 1);
    const double k = 0.5 * (xa + xb) <= 0.0 ? k1 : k2;
    rhs += half * (Y[j] * 0.5 * k * second(xa) + Y[j + 1] * 0.5 * k * second(xb));
  }
  const double dirac = 0.5 * (k2 - k1) * phi_dx(0.0) * Y[grid.origin_index()];
  return {std::abs(lhs - rhs - dirac), std::abs(lhs - rhs), dirac};
}

}  // namespace spdectl
