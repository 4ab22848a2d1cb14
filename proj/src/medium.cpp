#include "spdectl/medium.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace spdectl {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << name << " must be a finite positive number (got " << v << ")";
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

CompositeMedium::CompositeMedium(double a1, double a2, double rho1, double rho2)
    : a1_(a1), a2_(a2), rho1_(rho1), rho2_(rho2) {
  require_positive(a1, "a1");
  require_positive(a2, "a2");
  require_positive(rho1, "rho1");
  require_positive(rho2, "rho2");
  sqrt_a1_ = std::sqrt(a1_);
  sqrt_a2_ = std::sqrt(a2_);
  const double left = rho1_ * sqrt_a1_;
  const double right = rho2_ * sqrt_a2_;
  lambda_ = (right - left) / (right + left);
}

double CompositeMedium::h(double z) const {
  return z <= 0.0 ? z / sqrt_a1_ : z / sqrt_a2_;
}

double CompositeMedium::h_inverse(double w) const {
  return w <= 0.0 ? w * sqrt_a1_ : w * sqrt_a2_;
}

std::string CompositeMedium::describe() const {
  std::ostringstream os;
  os << "a1=" << a1_ << " a2=" << a2_ << " rho1=" << rho1_ << " rho2=" << rho2_;
  return os.str();
}

double lambda_coeff(const CompositeMedium& medium) { return medium.lambda(); }

double h_map(const CompositeMedium& medium, double z) { return medium.h(z); }

}  // namespace spdectl
