#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "spdectl/control.hpp"
#include "spdectl/presets.hpp"

using namespace spdectl;

namespace {

ControlProblem problem_from(const Preset& p, const InitialCondition& ic, const SpaceTimeGrid& grid,
                            std::size_t n_paths, std::uint64_t seed) {
  return ControlProblem{p.law, p.coeffs, p.cost, ic, grid, sample_paths(seed, grid, n_paths),
                        Execution::parallel};
}

}  // namespace

TEST_CASE("controlled generator of the two-layer law") {
  const auto law = two_layer_law(0.1, 2.0);
  law.validate();
  const SpaceTimeGrid grid(-1, 1, 41, 1.0, 100);
  const auto gen = controlled_generator(law, 1.0, grid);
  const auto ref = discrete_generator(1.0, 2.0, 1.0, 1.0, grid);
  CHECK(gen.op.lower == ref.op.lower);
  CHECK(gen.op.upper == ref.op.upper);
  const std::vector<double> ones(grid.nx(), 1.0);
  for (double v : gen.op.apply(ones)) CHECK(std::abs(v) < 1e-12);
  CHECK_THROWS_AS(controlled_generator(law, 2.5, grid), AdmissibilityError);

  const auto homog = ControlledMaterialLaw::affine(0, 1, 0, 1, 1, 1, 0.1, 2.0);
  std::vector<double> sq(grid.nx());
  for (std::size_t j = 0; j < grid.nx(); ++j) sq[j] = grid.x(j) * grid.x(j);
  const auto out = controlled_generator(homog, 0.7, grid).op.apply(sq);
  for (std::size_t j = 1; j + 1 < grid.nx(); ++j) CHECK(out[j] == doctest::Approx(0.7));
}

TEST_CASE("u-derivative of the generator") {
  const SpaceTimeGrid grid(-1, 1, 41, 1.0, 100);
  const auto law = two_layer_law(0.1, 2.0);
  std::vector<double> sq(grid.nx()), c(grid.nx(), 3.0);
  for (std::size_t j = 0; j < grid.nx(); ++j) sq[j] = grid.x(j) * grid.x(j);
  const auto d = generator_u_derivative(law, 0.5, sq, grid);
  for (std::size_t j = 1; j + 1 < grid.nx(); ++j) CHECK(d[j] == doctest::Approx(1.0));
  for (double v : generator_u_derivative(law, 0.5, c, grid)) CHECK(std::abs(v) < 1e-12);
  const auto fixed = ControlledMaterialLaw::affine(1, 0, 2, 0, 1, 1, 0.1, 2.0);
  for (double v : generator_u_derivative(fixed, 0.5, sq, grid)) CHECK(v == 0.0);
}

TEST_CASE("material law validation") {
  CHECK_THROWS_AS(ControlledMaterialLaw::affine(-1, 1, 1, 1, 1, 1, 0.1, 2.0),
                  std::invalid_argument);
  auto wrong = two_layer_law(0.1, 2.0);
  wrong.da1_du = [](double) { return 2.0; };
  CHECK_THROWS_AS(wrong.validate(), std::invalid_argument);
  const auto law = two_layer_law(0.1, 2.0);
  const auto t = ControlTrajectory{{-1.0, 0.5, 3.0}}.projected(law);
  CHECK(t.u == std::vector<double>{0.1, 0.5, 2.0});
  CHECK(t.projected(law).u == t.u);
}

TEST_CASE("Hamiltonian") {
  PresetParams pp;
  pp.theta = 1.0;
  const auto p = temp_control(pp);
  CHECK(hamiltonian(0, 0, 0.0, 1.0, 2.0, 0.0, 0.0, p.coeffs, p.cost) == doctest::Approx(5.0));
  const auto q = heat_storage(PresetParams{});
  CostSpec zero = q.cost;
  zero.f = [](double, double, double, double) { return 0.0; };
  CHECK(hamiltonian(0, 0, 0.3, 1.0, 1.0, 2.0, 4.0, q.coeffs, zero) ==
        doctest::Approx(2.0 * 0.3 + 4.0 * pp.sigma0));
  pp.theta = 0.7;
  const auto r = temp_control(pp);
  for (double u : {0.2, 0.9, 1.5}) {
    const double hm = hamiltonian(0.1, 0.2, 0.4, 0.8, u - 0.1, 1.3, 0.6, r.coeffs, r.cost);
    const double h0 = hamiltonian(0.1, 0.2, 0.4, 0.8, u, 1.3, 0.6, r.coeffs, r.cost);
    const double hp = hamiltonian(0.1, 0.2, 0.4, 0.8, u + 0.1, 1.3, 0.6, r.coeffs, r.cost);
    CHECK((hp - 2 * h0 + hm) / 0.01 == doctest::Approx(2 * 0.7));
  }
}

TEST_CASE("cost evaluation") {
  const SpaceTimeGrid grid(-1, 1, 11, 1.0, 80);
  PresetParams pp;
  pp.theta = 0.3;
  pp.gamma = 2.0;
  auto pre = temp_control(pp);
  const auto u = ControlTrajectory::constant(grid.nt(), 0.8);

  auto none = pre;
  none.cost.f = [](double, double, double, double) { return 0.0; };
  none.cost.g = [](double) { return 0.0; };
  const auto e0 = cost_eval(problem_from(none, InitialCondition::bump(0, 0.3), grid, 20, 1), u);
  CHECK(e0.mean == 0.0);

  // With xi = 0 the state is sigma0 B on every path.
  const auto prob = problem_from(pre, InitialCondition::zero(), grid, 4000, 2);
  const auto Y = forward(prob, u);
  const auto costs = path_costs(prob, u, Y);
  const double s2 = pp.sigma0 * pp.sigma0;
  for (std::size_t p = 0; p < 5; ++p) {
    double run = 0.0;
    for (std::size_t k = 0; k < grid.nt(); ++k) {
      const double b = prob.paths.value(p, k);
      run += grid.dt() * (s2 * b * b + pp.theta * 0.64);
    }
    const double bt = prob.paths.value(p, grid.nt());
    CHECK(costs[p] == doctest::Approx(2.0 * run + 2.0 * pp.gamma * s2 * bt * bt).epsilon(1e-10));
  }
  const Estimate e = cost_eval(prob, u);
  const double dt = grid.dt();
  const double exact = 2.0 * (s2 * dt * dt * grid.nt() * (grid.nt() - 1) / 2.0 +
                              pp.theta * 0.64 * 1.0) +
                       2.0 * pp.gamma * s2 * 1.0;
  CHECK(std::abs(e.mean - exact) < 4.0 * e.se);

  auto shifted = pre;
  shifted.cost.g = [g = pre.cost.g](double y) { return g(y) + 0.25; };
  const auto es = cost_eval(problem_from(shifted, InitialCondition::zero(), grid, 4000, 2), u);
  CHECK(es.mean - e.mean == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("adjoint of the heat-storage preset with no terminal cost") {
  PresetParams pp;
  pp.gamma1 = 1.5;
  pp.gamma3 = 0.0;
  const SpaceTimeGrid grid(-1, 1, 11, 1.0, 80);
  const auto prob = problem_from(heat_storage(pp), InitialCondition::bump(0, 0.4), grid, 50, 3);
  const auto u = ControlTrajectory::constant(grid.nt(), 0.6);
  const auto Y = forward(prob, u);
  const auto adj = adjoint_solve(prob, u, Y);
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t k = 0; k <= grid.nt(); ++k) {
      for (std::size_t j = 0; j < grid.nx(); ++j) {
        CHECK(adj.p_at(p, k, j) == doctest::Approx(1.5 * (1.0 - grid.t(k))).epsilon(1e-10));
      }
    }
  }
  for (double q : adj.q) CHECK(std::abs(q) < 1e-10);
}

TEST_CASE("adjoint terminal slice and variation identities") {
  const SpaceTimeGrid grid(-1, 1, 11, 1.0, 80);
  const auto prob =
      problem_from(temp_control(PresetParams{}), InitialCondition::bump(0.3, 0.2), grid, 30, 4);
  const auto u = ControlTrajectory::constant(grid.nt(), 0.6);
  const auto Y = forward(prob, u);
  const auto adj = adjoint_solve(prob, u, Y);
  for (std::size_t p = 0; p < prob.paths.n_paths(); ++p) {
    for (std::size_t j = 0; j < grid.nx(); ++j) {
      CHECK(adj.p_at(p, grid.nt(), j) == 2.0 * Y.at(p, grid.nt(), j));
    }
  }
  const std::vector<double> zero(grid.nt(), 0.0);
  for (double z : variation_solve(prob, u, zero, Y).values) CHECK(z == 0.0);
  auto fixed = prob;
  fixed.law = ControlledMaterialLaw::affine(1, 0, 2, 0, 1, 1, 0.1, 2.0);
  const std::vector<double> beta(grid.nt(), 1.0);
  const auto Yf = forward(fixed, u);
  for (double z : variation_solve(fixed, u, beta, Yf).values) CHECK(z == 0.0);
  const auto Z = variation_solve(prob, u, beta, Y);
  for (std::size_t p = 0; p < prob.paths.n_paths(); ++p) {
    for (double z : Z.slice(p, 0)) CHECK(z == 0.0);
  }
}

TEST_CASE("gradient with a u-independent state") {
  PresetParams pp;
  pp.theta = 0.4;
  const SpaceTimeGrid grid(-1, 1, 11, 1.0, 80);
  const auto prob = problem_from(temp_control(pp), InitialCondition::zero(), grid, 200, 5);
  ControlTrajectory u = ControlTrajectory::constant(grid.nt(), 0.5);
  for (std::size_t k = 0; k < grid.nt(); ++k) u[k] = 0.2 + 0.01 * static_cast<double>(k);
  const auto Y = forward(prob, u);
  const auto g = smp_gradient(prob, u, Y, adjoint_solve(prob, u, Y));
  for (std::size_t k = 0; k < grid.nt(); ++k) {
    CHECK(g[k] == doctest::Approx(2.0 * pp.theta * u[k] * 2.0).epsilon(1e-9));
  }
}

TEST_CASE("three directional derivative estimators agree") {
  PresetParams pp;
  pp.theta = 0.05;
  const SpaceTimeGrid grid(-1, 1, 11, 0.5, 60);
  const auto prob =
      problem_from(temp_control(pp), InitialCondition::bump(0.3, 0.2), grid, 400, 6);
  const auto u = ControlTrajectory::constant(grid.nt(), 0.7);
  std::vector<double> beta(grid.nt());
  for (std::size_t k = 0; k < grid.nt(); ++k) beta[k] = std::cos(0.1 * static_cast<double>(k));
  const Estimate a = directional_adjoint(prob, u, beta);
  const Estimate v = directional_variation(prob, u, beta);
  const Estimate f = directional_fd(prob, u, beta);
  CHECK(v.mean == doctest::Approx(f.mean).epsilon(1e-2));
  const double tol = std::max(3.0 * std::hypot(a.se, v.se), 0.05 * std::abs(v.mean));
  CHECK(std::abs(a.mean - v.mean) <= tol);
}

TEST_CASE("forward solve guards") {
  const SpaceTimeGrid coarse(-1, 1, 41, 1.0, 5);
  const auto prob = problem_from(temp_control(PresetParams{}), InitialCondition::zero(), coarse, 2, 7);
  CHECK_THROWS_AS(forward(prob, ControlTrajectory::constant(coarse.nt(), 1.0)),
                  std::invalid_argument);
  const SpaceTimeGrid grid(-1, 1, 11, 1.0, 80);
  const auto ok = problem_from(temp_control(PresetParams{}), InitialCondition::zero(), grid, 2, 7);
  CHECK_THROWS_AS(forward(ok, ControlTrajectory::constant(grid.nt(), 5.0)), AdmissibilityError);
}

TEST_CASE("optimizer") {
  PresetParams pp;
  pp.theta = 0.5;
  const SpaceTimeGrid grid(-1, 1, 11, 1.0, 80);
  SUBCASE("state-independent cost drives u to the lower bound") {
    const auto prob = problem_from(temp_control(pp), InitialCondition::zero(), grid, 100, 8);
    const auto res = optimize(prob, ControlTrajectory::constant(grid.nt(), 0.8));
    CHECK(res.converged);
    for (double v : res.u.u) CHECK(v == doctest::Approx(0.1));
    for (double g : res.gradient) CHECK(g > 0.0);
  }
  SUBCASE("a stationary start is returned unchanged") {
    auto pre = temp_control(pp);
    pre.cost.f = [](double, double, double y, double) { return y * y; };
    pre.cost.f_u = [](double, double, double, double) { return 0.0; };
    const auto prob = problem_from(pre, InitialCondition::zero(), grid, 50, 9);
    const auto u0 = ControlTrajectory::constant(grid.nt(), 0.8);
    const auto res = optimize(prob, u0);
    CHECK(res.converged);
    CHECK(res.u.u == u0.u);
    CHECK(res.trace.size() == 1);
  }
}
