#include "spdectl/kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

namespace spdectl {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void require_elapsed(double tau) {
  if (!(tau > 0.0)) {
    throw std::domain_error("fundamental solution requires elapsed time tau > 0");
  }
}

// G with explicit branch data for the source point. The reflection term is
// folded into the direct one as exp(-A) (1 + lambda s exp(-(B - A))), B >= A.
double green_branch(const CompositeMedium& m, double tau, double x, double hz, double a_z,
                    double sign_z) {
  const double hx = m.h(x);
  const double direct = (hx - hz) * (hx - hz) / (2.0 * tau);
  const double gap = (std::abs(hx) * std::abs(hz) + hx * hz) / tau;
  const double bracket = 1.0 + m.lambda() * sign_z * std::exp(-gap);
  return kInvSqrt2Pi / std::sqrt(tau * a_z) * std::exp(-direct) * bracket;
}

// Fixed 8-point Gauss-Legendre rule on [-1, 1].
struct Rule {
  std::array<double, 8> node;
  std::array<double, 8> weight;
};

const Rule& legendre8() {
  static const Rule rule = [] {
    using gauss = boost::math::quadrature::gauss<double, 8>;
    const auto& abscissa = gauss::abscissa();
    const auto& w = gauss::weights();
    Rule r{};
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
      r.node[2 * i] = -abscissa[i];
      r.node[2 * i + 1] = abscissa[i];
      r.weight[2 * i] = w[i];
      r.weight[2 * i + 1] = w[i];
    }
    return r;
  }();
  return rule;
}

}  // namespace

KernelBounds gaussian_bound_constants(const CompositeMedium& medium) {
  KernelBounds b{};
  b.c_lambda = (1.0 + std::abs(medium.lambda())) *
               (1.0 / std::sqrt(medium.a1()) + 1.0 / std::sqrt(medium.a2()));
  b.c_diff = std::min(1.0 / medium.a1(), 1.0 / medium.a2());
  b.c1 = b.c_lambda * std::sqrt(b.c_diff);
  return b;
}

double gaussian_bound(const CompositeMedium& medium, double tau, double x, double z) {
  require_elapsed(tau);
  const KernelBounds b = gaussian_bound_constants(medium);
  return b.c_lambda * kInvSqrt2Pi / std::sqrt(tau) *
         std::exp(-(x - z) * (x - z) / (2.0 * b.c_diff * tau));
}

double green(const CompositeMedium& medium, double tau, double x, double z) {
  require_elapsed(tau);
  return green_branch(medium, tau, x, medium.h(z), medium.diffusivity(z), interface_sign(z));
}

double green_left_limit(const CompositeMedium& medium, double tau, double x) {
  require_elapsed(tau);
  return green_branch(medium, tau, x, 0.0, medium.a1(), -1.0);
}

double green_right_limit(const CompositeMedium& medium, double tau, double x) {
  require_elapsed(tau);
  return green_branch(medium, tau, x, 0.0, medium.a2(), 1.0);
}

double green_mass(const CompositeMedium& medium, double tau, double x) {
  require_elapsed(tau);
  return green_integral(medium, tau, x, [](double) { return 1.0; });
}

GreenOperator::GreenOperator(const CompositeMedium& medium, const SpaceTimeGrid& grid,
                             double tau, double tau_min)
    : GreenOperator(medium, grid, tau, tau_min, grid.nodes()) {}

GreenOperator::GreenOperator(const CompositeMedium& medium, const SpaceTimeGrid& grid,
                             double tau, double tau_min, std::span<const double> targets)
    : tau_(tau), identity_(tau < tau_min || tau == 0.0), nx_(grid.nx()) {
  if (tau < 0.0) throw std::domain_error("green operator requires tau >= 0");
  first_.resize(targets.size());
  offset_.resize(targets.size() + 1);
  offset_[0] = 0;
  std::vector<double> row;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double x = targets[i];
    if (identity_) {
      // Linear interpolation of f at x, constant outside the grid.
      const double s = (x - grid.x_min()) / grid.dx();
      if (s <= 0.0) {
        row.assign(1, 1.0);
        first_[i] = 0;
      } else if (s >= static_cast<double>(nx_ - 1)) {
        row.assign(1, 1.0);
        first_[i] = nx_ - 1;
      } else {
        const double r = std::round(s);
        if (std::abs(s - r) < 1e-9) {
          row.assign(1, 1.0);
          first_[i] = static_cast<std::size_t>(r);
        } else {
          auto j = static_cast<std::size_t>(std::floor(s));
          const double frac = s - static_cast<double>(j);
          row = {1.0 - frac, frac};
          first_[i] = j;
        }
      }
    } else {
      build_row(medium, grid, x, row, first_[i]);
    }
    weights_.insert(weights_.end(), row.begin(), row.end());
    offset_[i + 1] = weights_.size();
  }
}

void GreenOperator::build_row(const CompositeMedium& m, const SpaceTimeGrid& grid, double x,
                              std::vector<double>& row, std::size_t& first) const {
  const Rule& rule = legendre8();
  const double tau = tau_;
  const double hx = m.h(x);
  const double half = kTailWidthSigmas * std::sqrt(tau);
  const double z_lo = m.h_inverse(hx - half);
  const double z_hi = m.h_inverse(hx + half);
  const double dx = grid.dx();
  const std::size_t last = nx_ - 1;

  // Node range touched by the window.
  const double s_lo = (z_lo - grid.x_min()) / dx;
  const double s_hi = (z_hi - grid.x_min()) / dx;
  const auto j_lo = static_cast<std::size_t>(
      std::clamp(std::floor(s_lo), 0.0, static_cast<double>(last)));
  const auto j_hi = static_cast<std::size_t>(
      std::clamp(std::ceil(s_hi), 0.0, static_cast<double>(last)));
  first = j_lo;
  row.assign(j_hi - j_lo + 1, 0.0);

  // Integrates G * (weight_lo * (b - z) + weight_hi * (z - a)) / (b - a) style
  // hat pieces over [lo, hi] inside one material.
  auto panel_sum = [&](double lo, double hi, auto&& accumulate) {
    if (!(hi > lo)) return;
    const double mid = 0.5 * (lo + hi);
    const double a_z = m.diffusivity(mid);
    const double hz_scale = mid <= 0.0 ? 1.0 / std::sqrt(m.a1()) : 1.0 / std::sqrt(m.a2());
    const double sign_z = interface_sign(mid);
    const double width = 0.5 * std::sqrt(a_z * tau);
    const auto panels = static_cast<std::size_t>(std::max(1.0, std::ceil((hi - lo) / width)));
    const double step = (hi - lo) / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
      const double pa = lo + static_cast<double>(p) * step;
      const double c = pa + 0.5 * step;
      for (std::size_t q = 0; q < rule.node.size(); ++q) {
        const double z = c + 0.5 * step * rule.node[q];
        const double g = green_branch(m, tau, x, z * hz_scale, a_z, sign_z);
        accumulate(z, 0.5 * step * rule.weight[q] * g);
      }
    }
  };

  // Tails outside the grid carry the end values.
  if (z_lo < grid.x_min()) {
    const double lo = z_lo, hi = std::min(z_hi, grid.x_min());
    double mass = 0.0;
    panel_sum(lo, hi, [&](double, double w) { mass += w; });
    row.front() += mass;
  }
  if (z_hi > grid.x(last)) {
    const double lo = std::max(z_lo, grid.x(last)), hi = z_hi;
    double mass = 0.0;
    panel_sum(lo, hi, [&](double, double w) { mass += w; });
    row.back() += mass;
  }
  for (std::size_t j = j_lo; j < j_hi; ++j) {
    const double za = grid.x(j), zb = grid.x(j + 1);
    const double lo = std::max(za, z_lo), hi = std::min(zb, z_hi);
    double w_a = 0.0, w_b = 0.0;
    panel_sum(lo, hi, [&](double z, double w) {
      const double frac = (z - za) / (zb - za);
      w_a += w * (1.0 - frac);
      w_b += w * frac;
    });
    row[j - j_lo] += w_a;
    row[j + 1 - j_lo] += w_b;
  }
}

void GreenOperator::apply(std::span<const double> f, std::span<double> out) const {
  if (f.size() != nx_) throw std::invalid_argument("green operator: f has wrong length");
  if (out.size() != rows()) throw std::invalid_argument("green operator: bad output length");
  for (std::size_t i = 0; i < rows(); ++i) {
    const double* w = weights_.data() + offset_[i];
    const std::size_t n = offset_[i + 1] - offset_[i];
    const double* fi = f.data() + first_[i];
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += w[k] * fi[k];
    out[i] = acc;
  }
}

void GreenOperator::apply_block(std::span<const double> f, std::size_t width,
                                std::span<double> out) const {
  if (f.size() != nx_ * width || out.size() != rows() * width) {
    throw std::invalid_argument("green operator: block has wrong shape");
  }
  for (std::size_t i = 0; i < rows(); ++i) {
    const double* w = weights_.data() + offset_[i];
    const std::size_t n = offset_[i + 1] - offset_[i];
    const double* fi = f.data() + first_[i] * width;
    double* o = out.data() + i * width;
    std::fill(o, o + width, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double wk = w[k];
      const double* col = fi + k * width;
      for (std::size_t c = 0; c < width; ++c) o[c] += wk * col[c];
    }
  }
}

std::vector<double> GreenOperator::apply(std::span<const double> f) const {
  std::vector<double> out(rows());
  apply(f, out);
  return out;
}

double GreenOperator::row_mass(std::size_t i) const {
  double acc = 0.0;
  for (std::size_t k = offset_[i]; k < offset_[i + 1]; ++k) acc += weights_[k];
  return acc;
}

std::vector<double> apply_green(const CompositeMedium& medium, double tau,
                                std::span<const double> x_targets, std::span<const double> f,
                                const SpaceTimeGrid& grid, double tau_min) {
  return GreenOperator(medium, grid, tau, tau_min, x_targets).apply(f);
}

std::vector<double> apply_green(const CompositeMedium& medium, double tau,
                                std::span<const double> x_targets, std::span<const double> f,
                                const SpaceTimeGrid& grid) {
  return apply_green(medium, tau, x_targets, f, grid, grid.dt() / 10.0);
}

}  // namespace spdectl
