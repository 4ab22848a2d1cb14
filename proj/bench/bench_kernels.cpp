// Serial reference against the OpenMP path loops, and single against block kernel application.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "spdectl/brownian.hpp"
#include "spdectl/kernel.hpp"
#include "spdectl/linear.hpp"
#include "spdectl/medium.hpp"
#include "spdectl/picard.hpp"

using namespace spdectl;

namespace {

const CompositeMedium kMedium(1, 4, 1, 1);

Execution policy(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

void BM_LinearSolve(benchmark::State& state) {
  const SpaceTimeGrid grid(-4, 4, 161, 1.0, 100);
  const auto paths = sample_paths(1, grid, 256);
  const auto ic = InitialCondition::bump(0.3, 0.5);
  for (auto _ : state) {
    double sink = 0.0;
    solve_linear(kMedium, ic, 0.5, grid, paths, policy(state),
                 [&](std::size_t, std::span<const double> f) { sink += f.back(); });
    benchmark::DoNotOptimize(sink);
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_LinearSolve)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_Picard(benchmark::State& state) {
  const SpaceTimeGrid grid(-4, 4, 101, 1.0, 100);
  const auto paths = sample_paths(1, grid, 128);
  const auto coeffs = CoefficientSpec::affine(0.0, 0.0, 0.0, 0.1);
  for (auto _ : state) {
    double sink = 0.0;
    picard_solve(kMedium, coeffs, InitialCondition::constant(1.0), grid, paths, {},
                 policy(state), [&](std::size_t, std::span<const double> f) { sink += f.back(); });
    benchmark::DoNotOptimize(sink);
  }
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_Picard)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_GreenApply(benchmark::State& state) {
  const SpaceTimeGrid grid(-4, 4, 201, 1.0, 200);
  const GreenOperator K(kMedium, grid, grid.dt(), grid.dt() * 0.1);
  const std::size_t width = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  std::vector<double> f(grid.nx() * width), out(grid.nx() * width);
  for (double& v : f) v = nd(rng);
  for (auto _ : state) {
    if (width == 1) {
      K.apply(f, out);
    } else {
      K.apply_block(f, width, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(width));
}
BENCHMARK(BM_GreenApply)->Arg(1)->Arg(16)->ArgName("width");

}  // namespace

BENCHMARK_MAIN();
