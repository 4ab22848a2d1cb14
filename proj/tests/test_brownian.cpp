#include <doctest.h>

#include <cmath>

#include "spdectl/brownian.hpp"
#include "spdectl/ensemble.hpp"

using namespace spdectl;

TEST_CASE("philox4x32-10 known answers") {
  // Reference vectors distributed with the Random123 library.
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
        PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("keyed normals are reproducible and standard") {
  CHECK(keyed_normal(5, 17, 3) == keyed_normal(5, 17, 3));
  CHECK(keyed_normal(5, 17, 3) != keyed_normal(6, 17, 3));
  FieldMoments m(1);
  double m4 = 0.0;
  const std::size_t n = 200000;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = keyed_normal(1, i, 0);
    m.add(std::span<const double>(&z, 1));
    m4 += z * z * z * z;
  }
  CHECK(std::abs(m.mean()[0]) < 4.0 / std::sqrt(n));
  CHECK(std::abs(m.variance(0) - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(m4 / n - 3.0) < 0.1);
}

TEST_CASE("brownian bundle") {
  const SpaceTimeGrid grid(-1, 1, 5, 2.0, 40);
  CHECK_THROWS_AS(sample_paths(1, grid, 0), std::invalid_argument);
  const BrownianPaths a = sample_paths(9, grid, 300);
  const BrownianPaths b = sample_paths(9, grid, 300);
  CHECK(a.increment(123, 7) == b.increment(123, 7));
  CHECK(a.value(5, 0) == 0.0);
  double sum = 0.0;
  for (std::size_t k = 0; k < 40; ++k) sum += a.increment(5, k);
  CHECK(a.value(5, 40) == doctest::Approx(sum));
  const std::vector<double> v = a.values(5);
  CHECK(v.size() == 41);
  CHECK(v[40] == doctest::Approx(sum));
  // Var B(T) = T.
  FieldMoments m(1);
  const BrownianPaths big = sample_paths(3, grid, 20000);
  for (std::size_t p = 0; p < big.n_paths(); ++p) {
    const double bt = big.value(p, 40);
    m.add(std::span<const double>(&bt, 1));
  }
  CHECK(std::abs(m.variance(0) - 2.0) < 4.0 * 2.0 * std::sqrt(2.0 / 20000));
}

TEST_CASE("ordered ensemble reduction is identical across execution policies") {
  auto compute = [](std::size_t p) { return std::sin(static_cast<double>(p)) * 1e-3 + 1.0; };
  double serial = 0.0, parallel = 0.0;
  std::vector<std::size_t> order;
  run_paths(1000, Execution::serial, compute, [&](std::size_t, double v) { serial += v; });
  run_paths(1000, Execution::parallel, compute, [&](std::size_t p, double v) {
    parallel += v;
    order.push_back(p);
  });
  CHECK(serial == parallel);
  for (std::size_t i = 0; i < order.size(); ++i) CHECK(order[i] == i);
}
