#include "spdectl/brownian.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spdectl {

namespace {

constexpr std::uint32_t kW0 = 0x9E3779B9;
constexpr std::uint32_t kW1 = 0xBB67AE85;
constexpr std::uint32_t kM0 = 0xD2511F53;
constexpr std::uint32_t kM1 = 0xCD9E8D57;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

// Uniform on (0, 1] from 64 bits, 53 significant.
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kM0, ctr[0], lo0, hi0);
    mulhilo(kM1, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

double keyed_normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step) {
  const PhiloxCounter ctr{static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                          static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
  const PhiloxKey key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  const PhiloxCounter r = philox4x32_10(ctr, key);
  // Box-Muller, cosine branch.
  const double u1 = to_unit(r[0], r[1]);
  const double u2 = to_unit(r[2], r[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

BrownianPaths::BrownianPaths(std::uint64_t master_seed, std::size_t n_paths, std::size_t nt,
                             double dt)
    : seed_(master_seed), n_paths_(n_paths), nt_(nt), dt_(dt) {
  if (n_paths == 0) throw std::invalid_argument("n_paths must be at least 1");
  if (nt == 0) throw std::invalid_argument("nt must be at least 1");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  increments_.resize(n_paths * nt);
  const double scale = std::sqrt(dt);
  for (std::size_t p = 0; p < n_paths; ++p) {
    for (std::size_t k = 0; k < nt; ++k) {
      increments_[p * nt + k] = scale * keyed_normal(seed_, p, k);
    }
  }
}

double BrownianPaths::value(std::size_t path, std::size_t k) const {
  double b = 0.0;
  for (std::size_t m = 0; m < k; ++m) b += increment(path, m);
  return b;
}

std::vector<double> BrownianPaths::values(std::size_t path) const {
  std::vector<double> b(nt_ + 1, 0.0);
  for (std::size_t m = 0; m < nt_; ++m) b[m + 1] = b[m] + increment(path, m);
  return b;
}

BrownianPaths sample_paths(std::uint64_t seed, const SpaceTimeGrid& grid, std::size_t n_paths) {
  return BrownianPaths(seed, n_paths, grid.nt(), grid.dt());
}

}  // namespace spdectl
