#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "spdectl/brownian.hpp"
#include "spdectl/linear.hpp"
#include "spdectl/medium.hpp"
#include "spdectl/picard.hpp"

using namespace spdectl;

TEST_CASE("affine coefficients declare tight constants") {
  const auto c = CoefficientSpec::affine(0.5, -2.0, 0.1, 0.3);
  CHECK(c.b(0, 0, 1.0, 0) == doctest::Approx(-1.5));
  CHECK(c.sigma(0, 0, 2.0, 0) == doctest::Approx(0.7));
  const SpaceTimeGrid grid(-1, 1, 11, 1.0, 10);
  CHECK(check_hypotheses(c, grid).ok());
}

TEST_CASE("an understated Lipschitz constant is detected and rejected") {
  auto c = CoefficientSpec::affine(0.0, -2.0, 0.0, 0.0);
  c.lip = 0.5;
  const SpaceTimeGrid grid(-1, 1, 11, 1.0, 10);
  CHECK_FALSE(check_hypotheses(c, grid).ok());
  const auto paths = sample_paths(1, grid, 2);
  CHECK_THROWS_AS(picard_solve(CompositeMedium(1, 1, 1, 1), c, InitialCondition::zero(), grid,
                               paths),
                  std::invalid_argument);
}

TEST_CASE("additive noise converges after one iteration to the linear solution") {
  const SpaceTimeGrid grid(-3, 3, 41, 1.0, 20);
  const CompositeMedium m(1, 4, 1, 1);
  const auto ic = InitialCondition::bump(0.3, 0.4);
  const auto paths = sample_paths(4, grid, 8);
  const auto res = picard_solve(m, CoefficientSpec::affine(0, 0, 0.5, 0), ic, grid, paths);
  CHECK(res.diagnostics.converged);
  CHECK(res.diagnostics.iterations == 1);
  const auto lin = solve_linear(m, ic, 0.5, grid, paths);
  for (std::size_t i = 0; i < lin.values.size(); ++i) {
    CHECK(std::abs(res.field.values[i] - lin.values[i]) < 1e-10);
  }
}

TEST_CASE("linear drift reproduces exponential decay") {
  const SpaceTimeGrid grid(-2, 2, 21, 1.0, 50);
  const auto paths = sample_paths(1, grid, 1);
  const auto res = picard_solve(CompositeMedium(1, 1, 1, 1), CoefficientSpec::affine(0, -1, 0, 0),
                                InitialCondition::constant(1.0), grid, paths);
  for (std::size_t k = 0; k <= grid.nt(); ++k) {
    for (std::size_t j = 0; j < grid.nx(); ++j) {
      CHECK(std::abs(res.field.at(0, k, j) - std::exp(-grid.t(k))) < 1e-4);
    }
  }
  // Contraction: successive h decrease geometrically.
  const auto& h = res.diagnostics.h;
  REQUIRE(h.size() >= 3);
  for (std::size_t n = 1; n < h.size(); ++n) {
    if (h[n - 1] > 1e-20) CHECK(h[n] < 0.5 * h[n - 1]);
  }
}

TEST_CASE("non-convergence throws with diagnostics attached") {
  const SpaceTimeGrid grid(-2, 2, 21, 1.0, 20);
  const auto paths = sample_paths(3, grid, 4);
  PicardOptions opts;
  opts.max_iter = 1;
  opts.tol = 1e-14;
  try {
    picard_solve(CompositeMedium(1, 4, 1, 1), CoefficientSpec::affine(0, -1, 0.2, 0.2),
                 InitialCondition::constant(1.0), grid, paths, opts);
    FAIL("expected PicardNonConvergence");
  } catch (const PicardNonConvergence& e) {
    CHECK_FALSE(e.diagnostics.converged);
    CHECK(!e.diagnostics.h.empty());
  }
}

TEST_CASE("serial and parallel Picard agree bit for bit") {
  const SpaceTimeGrid grid(-2, 2, 21, 1.0, 20);
  const auto paths = sample_paths(8, grid, 40);
  const CompositeMedium m(0.5, 2, 1, 3);
  const auto c = CoefficientSpec::affine(0.1, -0.5, 0.0, 0.3);
  const auto ic = InitialCondition::bump(0.0, 0.5);
  const auto a = picard_solve(m, c, ic, grid, paths, {}, Execution::serial);
  const auto b = picard_solve(m, c, ic, grid, paths, {}, Execution::parallel);
  CHECK(a.field.values == b.field.values);
  CHECK(a.diagnostics.h == b.diagnostics.h);
}

TEST_CASE("Euler oracle converges at first order in time") {
  std::vector<double> err;
  for (std::size_t nt : {20, 40, 80}) {
    const SpaceTimeGrid grid(-1, 1, 11, 1.0, nt);
    const auto paths = sample_paths(1, grid, 1);
    const auto y = euler_oracle(CompositeMedium(1, 1, 1, 1), CoefficientSpec::affine(0, -1, 0, 0),
                                InitialCondition::constant(1.0), grid, paths);
    err.push_back(std::abs(y.at(0, nt, 5) - std::exp(-1.0)));
  }
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double order = std::log2(err[i - 1] / err[i]);
    CHECK(order > 0.9);
    CHECK(order < 1.1);
  }
}
