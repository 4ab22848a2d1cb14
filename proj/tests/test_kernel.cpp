#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "spdectl/checks.hpp"
#include "spdectl/kernel.hpp"

using namespace spdectl;

namespace {

const std::vector<CompositeMedium>& media() {
  static const std::vector<CompositeMedium> m = {
      {1, 1, 1, 1}, {1, 4, 1, 1}, {1, 1, 1, 2}, {0.5, 2, 1, 3}, {2, 0.25, 3, 1}};
  return m;
}

// Plain composite trapezoid on [-L, 0] and (0, L], independent of the
// adaptive routine in green_mass.
double trapezoid_mass(const CompositeMedium& m, double tau, double x) {
  const int n = 200000;
  const double L = 30.0;
  const double h = L / n;
  double left = 0.5 * (green(m, tau, x, -L) + green_left_limit(m, tau, x));
  double right = 0.5 * (green_right_limit(m, tau, x) + green(m, tau, x, L));
  for (int i = 1; i < n; ++i) {
    left += green(m, tau, x, -L + i * h);
    right += green(m, tau, x, i * h);
  }
  return (left + right) * h;
}

}  // namespace

TEST_CASE("medium parameters are validated and lambda matches its formula") {
  CHECK_THROWS_AS(CompositeMedium(-1, 1, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(CompositeMedium(1, 1, 0, 1), std::invalid_argument);
  const CompositeMedium m(1, 4, 1, 1);
  CHECK(m.lambda() == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(CompositeMedium(1, 1, 1, 2).lambda() == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(std::abs(CompositeMedium(2, 2, 5, 5).lambda()) < 1e-15);
  for (double z : {-3.0, -0.1, 0.0, 0.2, 5.0}) {
    CHECK(m.h_inverse(m.h(z)) == doctest::Approx(z).epsilon(1e-15));
  }
  CHECK(m.h(-2.0) == doctest::Approx(-2.0));
  CHECK(m.h(2.0) == doctest::Approx(1.0));
  CHECK(interface_sign(0.0) == -1.0);
}

TEST_CASE("homogeneous kernel is the heat kernel with variance a tau") {
  const CompositeMedium m(2.5, 2.5, 1.3, 1.3);
  for (double tau : {0.01, 0.3, 2.0}) {
    for (double x : {-1.0, 0.0, 0.7}) {
      for (double z : {-2.0, 0.0, 0.4, 1.1}) {
        const double var = 2.5 * tau;
        const double ref = std::exp(-(x - z) * (x - z) / (2 * var)) / std::sqrt(2 * M_PI * var);
        CHECK(green(m, tau, x, z) == doctest::Approx(ref).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("green rejects non-positive elapsed time") {
  CHECK_THROWS_AS(green(media()[1], 0.0, 0.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(green(media()[1], -1.0, 0.0, 0.0), std::domain_error);
}

TEST_CASE("kernel mass is one, by adaptive quadrature and by a plain trapezoid") {
  for (const auto& m : media()) {
    for (double tau : {0.05, 1.0}) {
      for (double x : {-1.2, 0.0, 0.6}) {
        CHECK(std::abs(green_mass(m, tau, x) - 1.0) < 1e-12);
        CHECK(std::abs(trapezoid_mass(m, tau, x) - 1.0) < 1e-7);
      }
    }
  }
}

TEST_CASE("kernel solves the backward equation away from the interface") {
  // d/dtau G = (a(x) / 2) d^2/dx^2 G for x != 0.
  for (const auto& m : media()) {
    for (double x : {-0.8, 0.5}) {
      for (double z : {-0.4, 0.3}) {
        const double tau = 0.4, ht = 1e-4, hx = 1e-3;
        const double dt = (green(m, tau + ht, x, z) - green(m, tau - ht, x, z)) / (2 * ht);
        const double dxx = (green(m, tau, x + hx, z) - 2 * green(m, tau, x, z) +
                            green(m, tau, x - hx, z)) / (hx * hx);
        CHECK(dt == doctest::Approx(0.5 * m.diffusivity(x) * dxx).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("interface checks pass for every test medium") {
  for (std::size_t i = 0; i < media().size(); ++i) {
    const std::string id = std::to_string(i);
    CHECK(check_jump_ratio(media()[i], id).pass);
    CHECK(check_flux(media()[i], id).pass);
    CHECK(check_semigroup(media()[i], id, 10).pass);
  }
}

TEST_CASE("density-weighted source flux jumps by rho2 / rho1") {
  const CompositeMedium m(1, 1, 1, 2);
  const double tau = 0.3, x = 0.5, eps = 1e-5;
  auto gz = [&](double z) { return green(m, tau, x, z); };
  const double left = (3 * green_left_limit(m, tau, x) - 4 * gz(-eps) + gz(-2 * eps)) / (2 * eps);
  const double right = (-3 * green_right_limit(m, tau, x) + 4 * gz(eps) - gz(2 * eps)) / (2 * eps);
  CHECK(right / left == doctest::Approx(1.0).epsilon(1e-6));  // a dG/dz continuous
  CHECK_FALSE(check_flux_source_density_weighted(m, "x").pass);
}

TEST_CASE("gaussian domination") {
  SUBCASE("scaled exponent holds for all media") {
    for (const auto& m : media()) CHECK(check_gaussian_bound_scaled(m, "m", 2000).pass);
  }
  SUBCASE("stated exponent holds when both diffusivities are at most one") {
    CHECK(check_gaussian_bound(CompositeMedium(1, 1, 1, 2), "m", 2000).pass);
    CHECK(check_gaussian_bound(CompositeMedium(0.5, 0.8, 1, 3), "m", 2000).pass);
  }
  SUBCASE("stated exponent fails for a2 = 4 at unit distance") {
    const CompositeMedium m(1, 4, 1, 1);
    CHECK(green(m, 1.0, 0.0, 1.0) > gaussian_bound(m, 1.0, 0.0, 1.0));
  }
}

TEST_CASE("green operator") {
  const SpaceTimeGrid grid(-4, 4, 161, 1.0, 10);
  for (const auto& m : media()) {
    SUBCASE("reproduces constants") {
      const GreenOperator K(m, grid, 0.3, grid.dt() / 10);
      const std::vector<double> ones(grid.nx(), 1.0);
      for (double v : K.apply(ones)) CHECK(std::abs(v - 1.0) < 1e-12);
      for (std::size_t i = 0; i < K.rows(); ++i) CHECK(std::abs(K.row_mass(i) - 1.0) < 1e-12);
    }
    SUBCASE("matches adaptive quadrature of the interpolated function") {
      auto f = [](double z) { return std::exp(-z * z) * (1 + 0.3 * z); };
      const GridFunction fg = sample(grid, f);
      const std::vector<double> targets = {-1.3, -0.2, 0.0, 0.45, 1.7};
      const std::vector<double> got = apply_green(m, 0.2, targets, fg.values, grid);
      for (std::size_t i = 0; i < targets.size(); ++i) {
        const double ref = green_integral(m, 0.2, targets[i], f);
        CHECK(std::abs(got[i] - ref) < 5e-3 * grid.dx() * grid.dx() * 40);
      }
    }
  }
  SUBCASE("identity below tau_min") {
    const GreenOperator K(media()[1], grid, 0.001, 0.01);
    CHECK(K.is_identity());
    const GridFunction fg = sample(grid, [](double z) { return std::sin(z); });
    const std::vector<double> out = K.apply(fg.values);
    for (std::size_t j = 0; j < grid.nx(); ++j) CHECK(out[j] == fg[j]);
    CHECK_THROWS(GreenOperator(media()[1], grid, -0.1, 0.01));
  }
  SUBCASE("block application equals column-wise application") {
    const GreenOperator K(media()[3], grid, 0.05, 0.0);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    const std::size_t w = 3;
    std::vector<double> block(grid.nx() * w), out(grid.nx() * w);
    for (double& v : block) v = nd(rng);
    K.apply_block(block, w, out);
    for (std::size_t c = 0; c < w; ++c) {
      std::vector<double> col(grid.nx());
      for (std::size_t j = 0; j < grid.nx(); ++j) col[j] = block[j * w + c];
      const std::vector<double> ref = K.apply(col);
      for (std::size_t j = 0; j < grid.nx(); ++j) CHECK(out[j * w + c] == doctest::Approx(ref[j]));
    }
  }
}

TEST_CASE("green operator second-order convergence in dx") {
  const CompositeMedium m(1, 4, 1, 2);
  auto f = [](double z) { return std::cos(2 * z) / (1 + z * z); };
  const double x = 0.3, tau = 0.1;
  const double ref = green_integral(m, tau, x, f);
  std::vector<double> err;
  for (std::size_t nx : {81, 161, 321}) {
    const SpaceTimeGrid grid(-4, 4, nx, 1.0, 10);
    const GridFunction fg = sample(grid, f);
    const std::vector<double> targets = {x};
    err.push_back(std::abs(apply_green(m, tau, targets, fg.values, grid)[0] - ref));
  }
  CHECK(std::log2(err[0] / err[1]) > 1.8);
  CHECK(std::log2(err[1] / err[2]) > 1.8);
}
