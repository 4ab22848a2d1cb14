#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <type_traits>
#include <vector>

namespace spdectl {

enum class Execution { serial, parallel };

/// Paths computed per parallel block before results are consumed.
inline constexpr std::size_t kPathBlock = 32;

/// Runs compute(p) for every path and hands each result to consume(p, result)
/// in increasing path order. compute may run concurrently under
/// Execution::parallel; consume always runs on the calling thread, so
/// reductions are bit-identical across execution policies.
template <class Compute, class Consume>
void run_paths(std::size_t n_paths, Execution exec, Compute&& compute, Consume&& consume) {
  using Result = std::decay_t<decltype(compute(std::size_t{0}))>;
  if (exec == Execution::serial) {
    for (std::size_t p = 0; p < n_paths; ++p) {
      Result r = compute(p);
      consume(p, std::move(r));
    }
    return;
  }
  std::vector<Result> block(kPathBlock);
  for (std::size_t start = 0; start < n_paths; start += kPathBlock) {
    const std::size_t count = std::min(kPathBlock, n_paths - start);
    const long n = static_cast<long>(count);
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < n; ++i) {
      block[static_cast<std::size_t>(i)] = compute(start + static_cast<std::size_t>(i));
    }
    for (std::size_t i = 0; i < count; ++i) consume(start + i, std::move(block[i]));
  }
}

/// Streaming mean and variance of vector-valued samples (Welford).
class FieldMoments {
 public:
  FieldMoments() = default;
  explicit FieldMoments(std::size_t size) : mean_(size, 0.0), m2_(size, 0.0) {}

  void add(std::span<const double> sample) {
    ++count_;
    const double inv = 1.0 / static_cast<double>(count_);
    for (std::size_t i = 0; i < mean_.size(); ++i) {
      const double d = sample[i] - mean_[i];
      mean_[i] += d * inv;
      m2_[i] += d * (sample[i] - mean_[i]);
    }
  }

  std::size_t count() const { return count_; }
  std::size_t size() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  /// Unbiased sample variance.
  double variance(std::size_t i) const {
    return count_ > 1 ? m2_[i] / static_cast<double>(count_ - 1) : 0.0;
  }
  /// Standard error of the mean.
  double standard_error(std::size_t i) const {
    return count_ > 1 ? std::sqrt(variance(i) / static_cast<double>(count_)) : 0.0;
  }

 private:
  std::size_t count_ = 0;
  std::vector<double> mean_, m2_;
};

/// Mean and standard error of a scalar sample.
struct Estimate {
  double mean = 0.0;
  double se = 0.0;
};

inline Estimate estimate(std::span<const double> samples) {
  FieldMoments m(1);
  for (double s : samples) m.add(std::span<const double>(&s, 1));
  return {m.mean().empty() ? 0.0 : m.mean()[0], m.standard_error(0)};
}

}  // namespace spdectl
