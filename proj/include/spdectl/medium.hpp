#pragma once

#include <string>

namespace spdectl {

/// Two-material medium on the real line: (a1, rho1) for x <= 0 and (a2, rho2)
/// for x > 0. The interface point x = 0 belongs to the left material.
class CompositeMedium {
 public:
  /// Throws std::invalid_argument naming the first non-positive parameter.
  CompositeMedium(double a1, double a2, double rho1, double rho2);

  double a1() const { return a1_; }
  double a2() const { return a2_; }
  double rho1() const { return rho1_; }
  double rho2() const { return rho2_; }

  double diffusivity(double x) const { return x <= 0.0 ? a1_ : a2_; }
  double density(double x) const { return x <= 0.0 ? rho1_ : rho2_; }

  /// Transmission coefficient (rho2 sqrt(a2) - rho1 sqrt(a1)) / (rho2 sqrt(a2) + rho1 sqrt(a1)).
  double lambda() const { return lambda_; }

  /// Piecewise-linear rescaling z / sqrt(a(z)); continuous and increasing.
  double h(double z) const;
  /// Inverse of h.
  double h_inverse(double w) const;

  bool is_homogeneous() const { return a1_ == a2_ && rho1_ == rho2_; }
  std::string describe() const;

 private:
  double a1_, a2_, rho1_, rho2_;
  double sqrt_a1_, sqrt_a2_;
  double lambda_;
};

double lambda_coeff(const CompositeMedium& medium);
double h_map(const CompositeMedium& medium, double z);

/// sign(z) with the convention sign(0) = -1.
inline double interface_sign(double z) { return z <= 0.0 ? -1.0 : 1.0; }

}  // namespace spdectl
