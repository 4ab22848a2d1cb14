#include "spdectl/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace spdectl {

SpaceTimeGrid::SpaceTimeGrid(double x_min, double x_max, std::size_t nx, double T,
                             std::size_t nt)
    : x_min_(x_min), x_max_(x_max), nx_(nx), T_(T), nt_(nt) {
  if (!(x_min < 0.0 && x_max > 0.0)) {
    throw std::invalid_argument("grid requires x_min < 0 < x_max");
  }
  if (nx < 3) throw std::invalid_argument("grid requires nx >= 3");
  if (nt < 1) throw std::invalid_argument("grid requires nt >= 1");
  if (!(T > 0.0)) throw std::invalid_argument("grid requires T > 0");
  dx_ = (x_max - x_min) / static_cast<double>(nx - 1);
  dt_ = T / static_cast<double>(nt);
  const double steps_to_zero = -x_min / dx_;
  const double rounded = std::round(steps_to_zero);
  if (std::abs(steps_to_zero - rounded) > 1e-9 * std::max(1.0, steps_to_zero)) {
    std::ostringstream os;
    os << "x = 0 is not a grid node (x_min=" << x_min << ", x_max=" << x_max
       << ", nx=" << nx << ")";
    throw std::invalid_argument(os.str());
  }
  origin_ = static_cast<std::size_t>(rounded);
}

double SpaceTimeGrid::x(std::size_t j) const {
  if (j == origin_) return 0.0;
  // Offsets from the origin keep nodes symmetric about 0 where the grid is.
  const double offset = static_cast<double>(static_cast<long long>(j) -
                                            static_cast<long long>(origin_));
  return offset * dx_;
}

std::size_t SpaceTimeGrid::nearest_node(double pos) const {
  const double r = std::round((pos - x_min_) / dx_);
  if (r <= 0.0) return 0;
  if (r >= static_cast<double>(nx_ - 1)) return nx_ - 1;
  return static_cast<std::size_t>(r);
}

std::vector<double> SpaceTimeGrid::nodes() const {
  std::vector<double> xs(nx_);
  for (std::size_t j = 0; j < nx_; ++j) xs[j] = x(j);
  return xs;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_grid_function_csv(std::ostream& os, const SpaceTimeGrid& grid,
                             std::span<const double> values) {
  if (values.size() != grid.nx()) {
    throw std::invalid_argument("grid function length does not match nx");
  }
  os << "x,value\n";
  for (std::size_t j = 0; j < grid.nx(); ++j) {
    os << format_double(grid.x(j)) << ',' << format_double(values[j]) << '\n';
  }
}

}  // namespace spdectl
