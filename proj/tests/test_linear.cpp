#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "spdectl/brownian.hpp"
#include "spdectl/ensemble.hpp"
#include "spdectl/kernel.hpp"
#include "spdectl/linear.hpp"
#include "spdectl/medium.hpp"

using namespace spdectl;

TEST_CASE("initial conditions respect their declared bound") {
  const SpaceTimeGrid grid(-2, 2, 41, 1.0, 10);
  for (double v : InitialCondition::zero().sample(grid)) CHECK(v == 0.0);
  for (double v : InitialCondition::constant(-0.7).sample(grid)) CHECK(v == -0.7);
  const auto b = InitialCondition::bump(0.3, 0.2, 2.0).sample(grid);
  CHECK(b[grid.nearest_node(0.3)] == doctest::Approx(2.0));
  InitialCondition bad{[](double x) { return x; }, 1.0};
  CHECK_THROWS_AS(bad.sample(grid), std::invalid_argument);
}

TEST_CASE("zero data and zero noise give the zero field") {
  const SpaceTimeGrid grid(-3, 3, 31, 1.0, 20);
  const auto paths = sample_paths(5, grid, 4);
  const StateField y = solve_linear(CompositeMedium(1, 4, 1, 1), InitialCondition::zero(), 0.0,
                                    grid, paths);
  for (double v : y.values) CHECK(v == 0.0);
}

TEST_CASE("constants are transported unchanged and noise enters as sigma0 B") {
  const SpaceTimeGrid grid(-3, 3, 31, 1.0, 20);
  const auto paths = sample_paths(9, grid, 6);
  const double s0 = 0.4;
  for (const auto& m : {CompositeMedium(1, 4, 1, 1), CompositeMedium(0.5, 2, 1, 3)}) {
    const StateField y = solve_linear(m, InitialCondition::constant(1.5), s0, grid, paths);
    for (std::size_t p = 0; p < paths.n_paths(); ++p) {
      for (std::size_t k = 0; k <= grid.nt(); ++k) {
        for (std::size_t j = 0; j < grid.nx(); ++j) {
          CHECK(std::abs(y.at(p, k, j) - (1.5 + s0 * paths.value(p, k))) < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("the field equals the propagated data plus sigma0 B") {
  const SpaceTimeGrid grid(-4, 4, 81, 0.5, 10);
  const CompositeMedium m(1, 4, 1, 1);
  const auto ic = InitialCondition::bump(0.3, 0.4);
  const auto xi = ic.sample(grid);
  const auto paths = sample_paths(2, grid, 3);
  const StateField y = solve_linear(m, ic, 0.5, grid, paths);
  for (std::size_t k = 1; k <= grid.nt(); ++k) {
    const GreenOperator K(m, grid, grid.t(k), grid.dt() * 0.1);
    const auto d = K.apply(xi);
    for (std::size_t p = 0; p < paths.n_paths(); ++p) {
      for (std::size_t j = 0; j < grid.nx(); ++j) {
        CHECK(std::abs(y.at(p, k, j) - d[j] - 0.5 * paths.value(p, k)) < 1e-6);
      }
    }
  }
}

TEST_CASE("serial and parallel execution agree bit for bit") {
  const SpaceTimeGrid grid(-2, 2, 21, 1.0, 10);
  const auto paths = sample_paths(17, grid, 70);
  const CompositeMedium m(2, 0.25, 3, 1);
  const auto ic = InitialCondition::bump(-0.2, 0.3);
  const auto a = solve_linear(m, ic, 0.3, grid, paths, Execution::serial);
  const auto b = solve_linear(m, ic, 0.3, grid, paths, Execution::parallel);
  CHECK(a.values == b.values);
}

TEST_CASE("second moment and covariance formulas") {
  const CompositeMedium m(1, 4, 1, 1);
  for (double t : {0.1, 1.0, 2.0}) {
    for (double x : {-1.0, 0.0, 0.5}) {
      CHECK(second_moment_linear(m, InitialCondition::zero(), 0.5, t, x) ==
            doctest::Approx(0.25 * t).epsilon(1e-6));
    }
  }
  CHECK(covariance_linear(m, 1.0, 2.0, 1.0, 0.3) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(covariance_linear(m, 1.0, 1.0, 2.0, 0.3) == doctest::Approx(1.0).epsilon(1e-6));
  // |D| <= M, so E|Y|^2 <= 2 (M^2 + T sigma0^2).
  const auto ic = InitialCondition::bump(0.0, 0.5, 1.2);
  for (double x : {-0.5, 0.0, 0.7}) {
    const double v = second_moment_linear(m, ic, 0.5, 1.0, x);
    CHECK(v > 0.0);
    CHECK(v <= 2.0 * (1.44 + 0.25));
  }
}

TEST_CASE("Monte Carlo second moment matches the formula") {
  const SpaceTimeGrid grid(-4, 4, 81, 1.0, 20);
  const CompositeMedium m(0.5, 2, 1, 3);
  const auto ic = InitialCondition::bump(0.2, 0.5);
  const auto paths = sample_paths(99, grid, 4000);
  const std::size_t j = grid.nearest_node(0.4);
  std::vector<double> sq;
  solve_linear(m, ic, 0.5, grid, paths, Execution::parallel,
               [&](std::size_t, std::span<const double> f) {
                 const double y = f[grid.nt() * grid.nx() + j];
                 sq.push_back(y * y);
               });
  const Estimate e = estimate(sq);
  const double ref = second_moment_linear(m, ic, 0.5, 1.0, grid.x(j));
  CHECK(std::abs(e.mean - ref) < 4.0 * e.se + 2e-3);
}
