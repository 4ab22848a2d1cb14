#include "spdectl/picard.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "spdectl/generator.hpp"
#include "spdectl/kernel.hpp"

namespace spdectl {

CoefficientSpec CoefficientSpec::affine(double b0, double b1, double s0, double s1) {
  CoefficientSpec c;
  c.b = [=](double, double, double y, double) { return b0 + b1 * y; };
  c.sigma = [=](double, double, double y, double) { return s0 + s1 * y; };
  c.b_y = [=](double, double, double, double) { return b1; };
  c.sigma_y = [=](double, double, double, double) { return s1; };
  c.lip = std::max(std::abs(b1), std::abs(s1));
  c.growth = std::max(std::max(std::abs(b0), std::abs(b1)), std::max(std::abs(s0), std::abs(s1)));
  return c;
}

HypothesisCheck check_hypotheses(const CoefficientSpec& coeffs, const SpaceTimeGrid& grid,
                                 std::uint64_t seed, std::size_t samples, double y_range) {
  if (!coeffs.b || !coeffs.sigma) throw std::invalid_argument("coefficients b and sigma required");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ut(0.0, grid.horizon());
  std::uniform_real_distribution<double> ux(grid.x_min(), grid.x_max());
  std::uniform_real_distribution<double> uy(-y_range, y_range);
  HypothesisCheck out;
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = ut(rng), x = ux(rng), y = uy(rng), y2 = uy(rng);
    for (const Coefficient* f : {&coeffs.b, &coeffs.sigma}) {
      const double fy = (*f)(t, x, y, 0.0);
      const double fy2 = (*f)(t, x, y2, 0.0);
      if (y != y2) {
        const double lip = std::abs(fy - fy2) / std::abs(y - y2);
        out.lip_ratio = std::max(out.lip_ratio, coeffs.lip > 0.0 ? lip / coeffs.lip
                                                                 : (lip > 0.0 ? INFINITY : 0.0));
      }
      const double g = std::abs(fy) / (1.0 + std::abs(y));
      out.growth_ratio = std::max(
          out.growth_ratio, coeffs.growth > 0.0 ? g / coeffs.growth : (g > 0.0 ? INFINITY : 0.0));
    }
  }
  return out;
}

namespace {

void validate(const CoefficientSpec& coeffs, const SpaceTimeGrid& grid, const BrownianPaths& paths) {
  if (paths.nt() != grid.nt() || std::abs(paths.dt() - grid.dt()) > 1e-14 * grid.dt()) {
    throw std::invalid_argument("Brownian paths do not match the time grid");
  }
  const HypothesisCheck check = check_hypotheses(coeffs, grid);
  if (!check.ok()) {
    throw std::invalid_argument("coefficients violate their declared Lipschitz/growth constants");
  }
}

// Paths iterated together; the kernel is applied to all of them at once.
constexpr std::size_t kPicardBlock = 16;

// One application of the mild-solution map to a block of paths. Fields are
// stored [time][node][path] inside the block.
class PicardMap {
 public:
  PicardMap(const CompositeMedium& medium, const CoefficientSpec& coeffs,
            const std::vector<double>& det, const SpaceTimeGrid& grid, double tau_min)
      : coeffs_(coeffs), det_(det), grid_(grid),
        step_(medium, grid, grid.dt(), tau_min), nodes_(grid.nodes()) {}

  // dB[c * nt + m] is the increment of column c at step m.
  void operator()(std::span<const double> dB, std::size_t width, std::span<const double> y_n,
                  std::span<double> y_next) const {
    const std::size_t nx = grid_.nx(), nt = grid_.nt();
    const std::size_t slab = nx * width;
    const double dt = grid_.dt();
    std::vector<double> s(slab, 0.0), v(slab);
    for (std::size_t j = 0; j < nx; ++j) {
      std::fill_n(y_next.data() + j * width, width, det_[j]);
    }
    for (std::size_t k = 1; k <= nt; ++k) {
      const std::size_t m = k - 1;
      const double tm = grid_.t(m);
      const double weight = m == 0 ? 0.5 : 1.0;
      const double* ym = y_n.data() + m * slab;
      for (std::size_t j = 0; j < nx; ++j) {
        for (std::size_t c = 0; c < width; ++c) {
          const std::size_t i = j * width + c;
          v[i] = s[i] + weight * dt * coeffs_.b(tm, nodes_[j], ym[i], 0.0) +
                 coeffs_.sigma(tm, nodes_[j], ym[i], 0.0) * dB[c * nt + m];
        }
      }
      step_.apply_block(v, width, s);
      const double tk = grid_.t(k);
      const double* yk = y_n.data() + k * slab;
      double* out = y_next.data() + k * slab;
      const double* d = det_.data() + k * nx;
      for (std::size_t j = 0; j < nx; ++j) {
        for (std::size_t c = 0; c < width; ++c) {
          const std::size_t i = j * width + c;
          out[i] = d[j] + s[i] + 0.5 * dt * coeffs_.b(tk, nodes_[j], yk[i], 0.0);
        }
      }
    }
  }

 private:
  const CoefficientSpec& coeffs_;
  const std::vector<double>& det_;
  const SpaceTimeGrid& grid_;
  GreenOperator step_;
  std::vector<double> nodes_;
};

void add_sq_diff(std::vector<double>& acc, std::span<const double> a, std::span<const double> b) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += (a[i] - b[i]) * (a[i] - b[i]);
}

void add_sq(std::vector<double>& acc, std::span<const double> a) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += a[i] * a[i];
}

}  // namespace

PicardDiagnostics picard_solve(const CompositeMedium& medium, const CoefficientSpec& coeffs,
                               const InitialCondition& ic, const SpaceTimeGrid& grid,
                               const BrownianPaths& paths, const PicardOptions& opts,
                               Execution exec, const PathSink& sink) {
  if (!(opts.tol > 0.0)) throw std::invalid_argument("picard tol must be > 0");
  if (opts.max_iter < 1) throw std::invalid_argument("picard max_iter must be >= 1");
  validate(coeffs, grid, paths);

  const LinearSolver linear(medium, ic, 0.0, grid, opts.tau_min_ratio);
  const std::vector<double>& det = linear.deterministic();
  const PicardMap map(medium, coeffs, det, grid, opts.tau_min_ratio * grid.dt());
  const std::size_t size = grid.field_size();
  const std::size_t max_iter = opts.max_iter;
  const double path_tol = opts.tol * opts.path_floor;

  // Per path: iterates Y_1 .. Y_L, stopping once the path has converged. Paths
  // are iterated in fixed blocks; a block sweeps until all its paths stopped.
  using Iterates = std::vector<std::vector<double>>;
  const std::size_t n_paths = paths.n_paths();
  const std::size_t n_blocks = (n_paths + kPicardBlock - 1) / kPicardBlock;
  const std::size_t nt = grid.nt();
  auto compute = [&](std::size_t blk) {
    const std::size_t p0 = blk * kPicardBlock;
    const std::size_t width = std::min(kPicardBlock, n_paths - p0);
    std::vector<double> dB(width * nt);
    for (std::size_t c = 0; c < width; ++c) {
      std::span<const double> inc = paths.increments(p0 + c);
      std::copy(inc.begin(), inc.end(), dB.begin() + static_cast<long>(c * nt));
    }
    std::vector<double> prev(size * width), next(size * width);
    for (std::size_t i = 0; i < size; ++i) std::fill_n(prev.data() + i * width, width, det[i]);
    std::vector<Iterates> iterates(width);
    std::vector<char> active(width, 1);
    std::size_t n_active = width;
    for (std::size_t n = 0; n < max_iter && n_active > 0; ++n) {
      map(dB, width, prev, next);
      for (std::size_t c = 0; c < width; ++c) {
        if (!active[c]) continue;
        std::vector<double> field(size);
        double diff = 0.0;
        for (std::size_t i = 0; i < size; ++i) {
          field[i] = next[i * width + c];
          const double d = field[i] - prev[i * width + c];
          diff = std::max(diff, d * d);
        }
        iterates[c].push_back(std::move(field));
        if (diff <= path_tol) {
          active[c] = 0;
          --n_active;
        }
      }
      std::swap(prev, next);
    }
    return iterates;
  };

  // diff_acc[n] sums (Y_{n+1} - Y_n)^2; sq_acc[n] sums Y_n^2 over paths that
  // computed Y_n; tail_sq[L] sums the final iterate squared of paths stopping at L.
  std::vector<std::vector<double>> diff_acc(max_iter), sq_acc(max_iter + 1), tail_sq(max_iter + 1);
  std::vector<std::size_t> tail_count(max_iter + 1, 0);
  std::size_t longest = 0;
  auto consume_path = [&](std::size_t p, Iterates&& iterates) {
    const std::size_t L = iterates.size();
    longest = std::max(longest, L);
    for (std::size_t n = 0; n <= L; ++n) {
      std::span<const double> yn = n == 0 ? std::span<const double>(det) : iterates[n - 1];
      if (sq_acc[n].empty()) sq_acc[n].assign(size, 0.0);
      add_sq(sq_acc[n], yn);
      if (n < L) {
        if (diff_acc[n].empty()) diff_acc[n].assign(size, 0.0);
        add_sq_diff(diff_acc[n], iterates[n], yn);
      }
    }
    if (tail_sq[L].empty()) tail_sq[L].assign(size, 0.0);
    add_sq(tail_sq[L], iterates.back());
    ++tail_count[L];
    sink(p, iterates.back());
  };
  run_paths(n_blocks, exec, compute, [&](std::size_t blk, std::vector<Iterates>&& block) {
    for (std::size_t c = 0; c < block.size(); ++c) {
      consume_path(blk * kPicardBlock + c, std::move(block[c]));
    }
  });

  const double inv = 1.0 / static_cast<double>(paths.n_paths());
  PicardDiagnostics diag;
  diag.max_path_sweeps = longest;
  for (std::size_t n = 0; n < longest; ++n) {
    double h = 0.0;
    for (double v : diff_acc[n]) h = std::max(h, v * inv);
    diag.h.push_back(h);
  }
  std::vector<double> tail(size, 0.0);
  for (std::size_t n = 0; n <= longest; ++n) {
    // Paths that stopped before n keep their final iterate.
    if (n > 0 && !tail_sq[n - 1].empty()) {
      for (std::size_t i = 0; i < size; ++i) tail[i] += tail_sq[n - 1][i];
    }
    double m = 0.0;
    for (std::size_t i = 0; i < size; ++i) {
      const double direct = sq_acc[n].empty() ? 0.0 : sq_acc[n][i];
      m = std::max(m, (direct + tail[i]) * inv);
    }
    diag.second_moment.push_back(m);
  }
  for (std::size_t n = 0; n < diag.h.size(); ++n) {
    if (diag.h[n] <= opts.tol) {
      diag.iterations = n;
      diag.converged = true;
      break;
    }
  }
  if (!diag.converged) {
    diag.iterations = diag.h.size();
    throw PicardNonConvergence("Picard iteration did not reach tol within max_iter", diag);
  }
  return diag;
}

PicardResult picard_solve(const CompositeMedium& medium, const CoefficientSpec& coeffs,
                          const InitialCondition& ic, const SpaceTimeGrid& grid,
                          const BrownianPaths& paths, const PicardOptions& opts, Execution exec) {
  PicardResult out{StateField(paths.n_paths(), grid, paths.master_seed(), "picard"), {}};
  out.diagnostics = picard_solve(medium, coeffs, ic, grid, paths, opts, exec,
                                 [&](std::size_t p, std::span<const double> field) {
                                   std::copy(field.begin(), field.end(), out.field.path(p).begin());
                                 });
  return out;
}

void euler_oracle(const CompositeMedium& medium, const CoefficientSpec& coeffs,
                  const InitialCondition& ic, const SpaceTimeGrid& grid,
                  const BrownianPaths& paths, Execution exec, const PathSink& sink) {
  validate(coeffs, grid, paths);
  const DiscreteGenerator gen = discrete_generator(medium, grid);
  const ImplicitStepSolver step(gen.op, grid.dt());
  const std::vector<double> xi = ic.sample(grid);
  const std::vector<double> nodes = grid.nodes();
  const std::size_t nx = grid.nx(), nt = grid.nt();
  const double dt = grid.dt();
  run_paths(
      paths.n_paths(), exec,
      [&](std::size_t p) {
        std::vector<double> field(grid.field_size()), rhs(nx);
        std::copy(xi.begin(), xi.end(), field.begin());
        std::span<const double> dB = paths.increments(p);
        for (std::size_t k = 0; k < nt; ++k) {
          const double t = grid.t(k);
          const double* y = field.data() + k * nx;
          for (std::size_t j = 0; j < nx; ++j) {
            rhs[j] = y[j] + dt * coeffs.b(t, nodes[j], y[j], 0.0) +
                     coeffs.sigma(t, nodes[j], y[j], 0.0) * dB[k];
          }
          step.solve(rhs, std::span<double>(field.data() + (k + 1) * nx, nx));
        }
        return field;
      },
      [&](std::size_t p, std::vector<double>&& field) { sink(p, field); });
}

StateField euler_oracle(const CompositeMedium& medium, const CoefficientSpec& coeffs,
                        const InitialCondition& ic, const SpaceTimeGrid& grid,
                        const BrownianPaths& paths, Execution exec) {
  StateField out(paths.n_paths(), grid, paths.master_seed(), "euler-oracle");
  euler_oracle(medium, coeffs, ic, grid, paths, exec,
               [&](std::size_t p, std::span<const double> field) {
                 std::copy(field.begin(), field.end(), out.path(p).begin());
               });
  return out;
}

}  // namespace spdectl
