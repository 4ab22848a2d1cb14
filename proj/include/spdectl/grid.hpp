#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace spdectl {

/// Uniform space-time grid on [x_min, x_max] x [0, T]. The interface point
/// x = 0 is always a node.
class SpaceTimeGrid {
 public:
  SpaceTimeGrid(double x_min, double x_max, std::size_t nx, double T, std::size_t nt);

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  std::size_t nx() const { return nx_; }
  double horizon() const { return T_; }
  std::size_t nt() const { return nt_; }
  double dx() const { return dx_; }
  double dt() const { return dt_; }

  /// Node position; exact zero at origin_index().
  double x(std::size_t j) const;
  double t(std::size_t k) const { return static_cast<double>(k) * dt_; }
  std::size_t origin_index() const { return origin_; }
  /// Index of the node closest to `pos` (clamped to the grid).
  std::size_t nearest_node(double pos) const;

  std::vector<double> nodes() const;

  /// Number of values in one path of a space-time field: (nt + 1) * nx.
  std::size_t field_size() const { return (nt_ + 1) * nx_; }

 private:
  double x_min_, x_max_;
  std::size_t nx_;
  double T_;
  std::size_t nt_;
  double dx_, dt_;
  std::size_t origin_;
};

/// Values on the spatial nodes of a grid.
struct GridFunction {
  std::vector<double> values;

  GridFunction() = default;
  explicit GridFunction(std::vector<double> v) : values(std::move(v)) {}
  std::size_t size() const { return values.size(); }
  double operator[](std::size_t j) const { return values[j]; }
  double& operator[](std::size_t j) { return values[j]; }
};

/// Samples f at every node.
template <class F>
GridFunction sample(const SpaceTimeGrid& grid, F&& f) {
  GridFunction g;
  g.values.resize(grid.nx());
  for (std::size_t j = 0; j < grid.nx(); ++j) g.values[j] = f(grid.x(j));
  return g;
}

/// Writes `x,value` CSV.
void write_grid_function_csv(std::ostream& os, const SpaceTimeGrid& grid,
                             std::span<const double> values);

/// Formats a double with round-trip precision.
std::string format_double(double v);

}  // namespace spdectl
