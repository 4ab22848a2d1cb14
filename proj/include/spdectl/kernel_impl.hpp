#pragma once

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace spdectl {

namespace detail {

inline constexpr double kKronrodTolerance = 1e-13;
inline constexpr unsigned kKronrodDepth = 20;

template <class G>
double kronrod(G&& g, double a, double b) {
  if (!(b > a)) return 0.0;
  double error = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      g, a, b, kKronrodDepth, kKronrodTolerance, &error);
}

}  // namespace detail

template <class F>
double green_integral(const CompositeMedium& medium, double tau, double x, F&& f) {
  const double hx = medium.h(x);
  const double half = kTailWidthSigmas * std::sqrt(tau);
  const double z_lo = medium.h_inverse(hx - half);
  const double z_hi = medium.h_inverse(hx + half);
  auto integrand = [&](double z) { return green(medium, tau, x, z) * f(z); };
  if (z_hi <= 0.0 || z_lo >= 0.0) return detail::kronrod(integrand, z_lo, z_hi);
  return detail::kronrod(integrand, z_lo, 0.0) + detail::kronrod(integrand, 0.0, z_hi);
}

}  // namespace spdectl
