#include "spdectl/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace spdectl {

namespace {

double value_or_zero(const Coefficient& f, double t, double x, double y, double u) {
  return f ? f(t, x, y, u) : 0.0;
}

bool close_rel(double a, double b, double rel, double abs_floor) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

std::vector<double> cost_weights(const ControlProblem& pb) {
  return rho_trapezoid_weights(pb.law.rho1, pb.law.rho2, pb.grid, pb.cost.domain_lo,
                               pb.cost.domain_hi);
}

// chi_j = c_j / m_j: the cost-domain indicator as seen through the cell masses.
std::vector<double> cost_indicator(const ControlProblem& pb, const std::vector<double>& c) {
  const std::vector<double> m = rho_trapezoid_weights(pb.law.rho1, pb.law.rho2, pb.grid);
  std::vector<double> chi(c.size());
  for (std::size_t j = 0; j < c.size(); ++j) chi[j] = c[j] / m[j];
  return chi;
}

void check_trajectory(const ControlProblem& pb, const ControlTrajectory& u) {
  if (u.size() != pb.grid.nt()) throw std::invalid_argument("control trajectory needs nt entries");
  for (double v : u.u) pb.law.require_admissible(v);
}

void check_fields(const ControlProblem& pb, const StateField& Y) {
  if (Y.n_paths != pb.paths.n_paths() || Y.n_times != pb.grid.nt() + 1 || Y.nx != pb.grid.nx()) {
    throw std::invalid_argument("state field does not match the problem");
  }
}

// Generators are cached per distinct control value along the trajectory.
struct GeneratorCache {
  std::vector<DiscreteGenerator> gen, dgen;
  std::vector<std::size_t> index;  // time step -> cache slot

  GeneratorCache(const ControlProblem& pb, const ControlTrajectory& u, bool derivative) {
    std::vector<double> seen;
    for (std::size_t k = 0; k < u.size(); ++k) {
      auto it = std::find(seen.begin(), seen.end(), u[k]);
      if (it == seen.end()) {
        seen.push_back(u[k]);
        gen.push_back(controlled_generator(pb.law, u[k], pb.grid));
        if (derivative) dgen.push_back(controlled_generator_derivative(pb.law, u[k], pb.grid));
        index.push_back(seen.size() - 1);
      } else {
        index.push_back(static_cast<std::size_t>(it - seen.begin()));
      }
    }
  }
  const DiscreteGenerator& at(std::size_t k) const { return gen[index[k]]; }
  const DiscreteGenerator& derivative_at(std::size_t k) const { return dgen[index[k]]; }
};

}  // namespace

ControlledMaterialLaw ControlledMaterialLaw::affine(double c1, double s1, double c2, double s2,
                                                   double rho1, double rho2, double u_min,
                                                   double u_max) {
  ControlledMaterialLaw law;
  law.a1_of_u = [=](double u) { return c1 + s1 * u; };
  law.a2_of_u = [=](double u) { return c2 + s2 * u; };
  law.da1_du = [=](double) { return s1; };
  law.da2_du = [=](double) { return s2; };
  law.rho1 = rho1;
  law.rho2 = rho2;
  law.u_min = u_min;
  law.u_max = u_max;
  law.validate();
  return law;
}

void ControlledMaterialLaw::require_admissible(double u) const {
  if (!admissible(u)) {
    throw AdmissibilityError("control value " + format_double(u) + " outside [" +
                             format_double(u_min) + ", " + format_double(u_max) + "]");
  }
}

void ControlledMaterialLaw::validate(std::size_t samples) const {
  if (!(u_min <= u_max)) throw std::invalid_argument("u_min must not exceed u_max");
  if (!(rho1 > 0.0) || !(rho2 > 0.0)) throw std::invalid_argument("rho1, rho2 must be > 0");
  const double h = 1e-6 * std::max(1.0, u_max - u_min);
  for (std::size_t i = 0; i < samples; ++i) {
    const double u = samples == 1 ? u_min
                                  : u_min + (u_max - u_min) * static_cast<double>(i) /
                                                static_cast<double>(samples - 1);
    if (!(a1_of_u(u) > 0.0) || !(a2_of_u(u) > 0.0)) {
      throw std::invalid_argument("diffusivity must be > 0 on the admissible set (u = " +
                                  format_double(u) + ")");
    }
    const double fd1 = (a1_of_u(u + h) - a1_of_u(u - h)) / (2.0 * h);
    const double fd2 = (a2_of_u(u + h) - a2_of_u(u - h)) / (2.0 * h);
    if (!close_rel(fd1, da1_du(u), 1e-6, 1e-8) || !close_rel(fd2, da2_du(u), 1e-6, 1e-8)) {
      throw std::invalid_argument("da/du accessor disagrees with finite differences");
    }
  }
}

ControlTrajectory ControlTrajectory::projected(const ControlledMaterialLaw& law) const {
  ControlTrajectory out = *this;
  for (double& v : out.u) v = law.project(v);
  return out;
}

void CostSpec::validate(const SpaceTimeGrid& grid, double u_lo, double u_hi) const {
  if (!f || !f_y || !f_u || !g || !g_y) throw std::invalid_argument("cost callables missing");
  if (!(domain_lo < domain_hi)) throw std::invalid_argument("cost domain is empty");
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ut(0.0, grid.horizon()), ux(domain_lo, domain_hi),
      uy(-3.0, 3.0), uu(u_lo, u_hi);
  const double h = 1e-5;
  for (int i = 0; i < 50; ++i) {
    const double t = ut(rng), x = ux(rng), y = uy(rng), u = uu(rng);
    const double dfy = (f(t, x, y + h, u) - f(t, x, y - h, u)) / (2.0 * h);
    const double dfu = (f(t, x, y, u + h) - f(t, x, y, u - h)) / (2.0 * h);
    const double dgy = (g(y + h) - g(y - h)) / (2.0 * h);
    if (!close_rel(dfy, f_y(t, x, y, u), 1e-6, 1e-7) || !close_rel(dfu, f_u(t, x, y, u), 1e-6, 1e-7) ||
        !close_rel(dgy, g_y(y), 1e-6, 1e-7)) {
      throw std::invalid_argument("cost partial derivatives disagree with finite differences");
    }
  }
}

DiscreteGenerator controlled_generator(const ControlledMaterialLaw& law, double u,
                                       const SpaceTimeGrid& grid) {
  law.require_admissible(u);
  return discrete_generator(law.a1_of_u(u), law.a2_of_u(u), law.rho1, law.rho2, grid);
}

DiscreteGenerator controlled_generator_derivative(const ControlledMaterialLaw& law, double u,
                                                  const SpaceTimeGrid& grid) {
  law.require_admissible(u);
  return generator_derivative(law.a1_of_u(u), law.a2_of_u(u), law.da1_du(u), law.da2_du(u),
                              law.rho1, law.rho2, grid);
}

std::vector<double> generator_u_derivative(const ControlledMaterialLaw& law, double u,
                                           std::span<const double> y_slice,
                                           const SpaceTimeGrid& grid) {
  return controlled_generator_derivative(law, u, grid).apply(y_slice);
}

StateField forward(const ControlProblem& pb, const ControlTrajectory& u) {
  check_trajectory(pb, u);
  const SpaceTimeGrid& grid = pb.grid;
  const GeneratorCache cache(pb, u, false);
  const double dt = grid.dt();
  for (const auto& g : cache.gen) {
    double worst = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) worst = std::max(worst, -g.op.diagonal(j));
    if (dt * worst > 1.0) {
      throw std::invalid_argument("time step too large for the explicit scheme: dt * a / dx^2 = " +
                                  format_double(dt * worst) + " > 1; increase nt");
    }
  }
  const std::vector<double> xi = pb.ic.sample(grid);
  const std::vector<double> nodes = grid.nodes();
  const std::size_t nx = grid.nx(), nt = grid.nt();
  StateField Y(pb.paths.n_paths(), grid, pb.paths.master_seed(), "controlled-euler");
  run_paths(
      pb.paths.n_paths(), pb.exec,
      [&](std::size_t p) {
        std::vector<double> field(grid.field_size());
        std::copy(xi.begin(), xi.end(), field.begin());
        for (std::size_t k = 0; k < nt; ++k) {
          const double t = grid.t(k);
          const double dB = pb.paths.increment(p, k);
          std::span<const double> y(field.data() + k * nx, nx);
          std::span<double> next(field.data() + (k + 1) * nx, nx);
          for (std::size_t j = 0; j < nx; ++j) {
            next[j] = y[j] + dt * pb.coeffs.b(t, nodes[j], y[j], u[k]) +
                      pb.coeffs.sigma(t, nodes[j], y[j], u[k]) * dB;
          }
          cache.at(k).op.apply_add(y, dt, next);
        }
        return field;
      },
      [&](std::size_t p, std::vector<double>&& field) {
        std::copy(field.begin(), field.end(), Y.path(p).begin());
      });
  return Y;
}

std::vector<double> path_costs(const ControlProblem& pb, const ControlTrajectory& u,
                               const StateField& Y) {
  check_fields(pb, Y);
  const SpaceTimeGrid& grid = pb.grid;
  const std::vector<double> c = cost_weights(pb);
  const std::vector<double> nodes = grid.nodes();
  const std::size_t nt = grid.nt();
  std::vector<double> out(Y.n_paths);
  for (std::size_t p = 0; p < Y.n_paths; ++p) {
    double running = 0.0;
    for (std::size_t k = 0; k < nt; ++k) {
      std::span<const double> y = Y.slice(p, k);
      double s = 0.0;
      for (std::size_t j = 0; j < grid.nx(); ++j) {
        if (c[j] != 0.0) s += c[j] * pb.cost.f(grid.t(k), nodes[j], y[j], u[k]);
      }
      running += grid.dt() * s;
    }
    std::span<const double> yT = Y.slice(p, nt);
    double terminal = 0.0;
    for (std::size_t j = 0; j < grid.nx(); ++j) {
      if (c[j] != 0.0) terminal += c[j] * pb.cost.g(yT[j]);
    }
    out[p] = running + terminal;
  }
  return out;
}

Estimate cost_eval(const ControlProblem& pb, const ControlTrajectory& u) {
  const StateField Y = forward(pb, u);
  return estimate(path_costs(pb, u, Y));
}

double hamiltonian(double t, double x, double AuY, double y, double u, double p, double q,
                   const CoefficientSpec& coeffs, const CostSpec& cost) {
  return p * (AuY + value_or_zero(coeffs.b, t, x, y, u)) +
         q * value_or_zero(coeffs.sigma, t, x, y, u) + cost.f(t, x, y, u);
}

AdjointField adjoint_solve(const ControlProblem& pb, const ControlTrajectory& u,
                           const StateField& Y) {
  check_trajectory(pb, u);
  check_fields(pb, Y);
  const SpaceTimeGrid& grid = pb.grid;
  const std::size_t n = Y.n_paths, nx = grid.nx(), nt = grid.nt();
  const double dt = grid.dt();
  const std::vector<double> chi = cost_indicator(pb, cost_weights(pb));
  const std::vector<double> nodes = grid.nodes();
  const GeneratorCache cache(pb, u, false);

  AdjointField adj;
  adj.n_paths = n;
  adj.n_times = nt + 1;
  adj.nx = nx;
  adj.p.assign(n * (nt + 1) * nx, 0.0);
  adj.q.assign(nt * nx, 0.0);
  adj.diagnostics.assign(nt * nx, {});
  auto p_slice = [&](std::size_t path, std::size_t k) {
    return std::span<double>(adj.p.data() + (path * (nt + 1) + k) * nx, nx);
  };

  for (std::size_t path = 0; path < n; ++path) {
    std::span<const double> yT = Y.slice(path, nt);
    std::span<double> pT = p_slice(path, nt);
    for (std::size_t j = 0; j < nx; ++j) pT[j] = chi[j] == 0.0 ? 0.0 : chi[j] * pb.cost.g_y(yT[j]);
  }

  std::vector<double> bracket(n * nx), B(n), dB(n);
  std::vector<double> se_int_next(nx, 0.0), se_slope_next(nx, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = nt; k-- > 0;) {
    const double t = grid.t(k);
    const TridiagonalOperator adjoint_op = cache.at(k).adjoint();
    for (std::size_t path = 0; path < n; ++path) {
      B[path] = pb.paths.value(path, k);
      dB[path] = pb.paths.increment(path, k);
    }

    const long n_long = static_cast<long>(n);
#pragma omp parallel for schedule(static) if (pb.exec == Execution::parallel)
    for (long pl = 0; pl < n_long; ++pl) {
      const std::size_t path = static_cast<std::size_t>(pl);
      std::span<const double> pn = p_slice(path, k + 1);
      std::span<const double> y = Y.slice(path, k);
      double* br = bracket.data() + path * nx;
      std::vector<double> ap = adjoint_op.apply(pn);
      for (std::size_t j = 0; j < nx; ++j) {
        const double fy = chi[j] == 0.0 ? 0.0 : chi[j] * pb.cost.f_y(t, nodes[j], y[j], u[k]);
        br[j] = pn[j] + dt * (ap[j] + value_or_zero(pb.coeffs.b_y, t, nodes[j], y[j], u[k]) * pn[j] + fy);
      }
    }

    double mean_B = 0.0, mean_dB = 0.0;
    for (std::size_t path = 0; path < n; ++path) {
      mean_B += B[path];
      mean_dB += dB[path];
    }
    mean_B *= inv_n;
    mean_dB *= inv_n;
    double sxx = 0.0, sdd = 0.0;
    for (std::size_t path = 0; path < n; ++path) {
      sxx += (B[path] - mean_B) * (B[path] - mean_B);
      sdd += (dB[path] - mean_dB) * (dB[path] - mean_dB);
    }
    const bool fallback = !(sxx > 0.0) || n < 3;

    for (std::size_t j = 0; j < nx; ++j) {
      RegressionDiagnostics& d = adj.diagnostics[k * nx + j];
      // q_k = Cov(p_{k+1}, dB_k) / dt
      double mean_p = 0.0;
      for (std::size_t path = 0; path < n; ++path) mean_p += p_slice(path, k + 1)[j];
      mean_p *= inv_n;
      if (sdd > 0.0 && n > 1) {
        double cov = 0.0;
        for (std::size_t path = 0; path < n; ++path) {
          cov += (p_slice(path, k + 1)[j] - mean_p) * (dB[path] - mean_dB);
        }
        cov /= static_cast<double>(n - 1);
        double var_prod = 0.0;
        for (std::size_t path = 0; path < n; ++path) {
          const double prod = (p_slice(path, k + 1)[j] - mean_p) * (dB[path] - mean_dB) - cov;
          var_prod += prod * prod;
        }
        var_prod /= static_cast<double>(n - 1);
        d.q = cov / dt;
        d.q_se = std::sqrt(var_prod * inv_n) / dt;
      }
      d.q_se_total = std::sqrt(d.q_se * d.q_se + se_slope_next[j] * se_slope_next[j]);
      adj.q[k * nx + j] = d.q;

      double mean_br = 0.0;
      for (std::size_t path = 0; path < n; ++path) mean_br += bracket[path * nx + j];
      mean_br *= inv_n;
      if (fallback) {
        double var = 0.0;
        for (std::size_t path = 0; path < n; ++path) {
          const double e = bracket[path * nx + j] - mean_br;
          var += e * e;
        }
        d.fallback = true;
        d.intercept = mean_br;
        d.slope = 0.0;
        d.se_intercept = n > 1 ? std::sqrt(var / static_cast<double>(n - 1) * inv_n) : 0.0;
        d.se_slope = 0.0;
      } else {
        double sxy = 0.0;
        for (std::size_t path = 0; path < n; ++path) {
          sxy += (B[path] - mean_B) * (bracket[path * nx + j] - mean_br);
        }
        d.slope = sxy / sxx;
        d.intercept = mean_br - d.slope * mean_B;
        double ssr = 0.0;
        for (std::size_t path = 0; path < n; ++path) {
          const double e = bracket[path * nx + j] - d.intercept - d.slope * B[path];
          ssr += e * e;
        }
        const double s2 = ssr / static_cast<double>(n - 2);
        d.se_slope = std::sqrt(s2 / sxx);
        d.se_intercept = std::sqrt(s2 * (inv_n + mean_B * mean_B / sxx));
      }
      d.se_intercept_total = std::sqrt(d.se_intercept * d.se_intercept + se_int_next[j] * se_int_next[j]);
      d.se_slope_total = std::sqrt(d.se_slope * d.se_slope + se_slope_next[j] * se_slope_next[j]);
    }
    for (std::size_t j = 0; j < nx; ++j) {
      se_int_next[j] = adj.diagnostics[k * nx + j].se_intercept_total;
      se_slope_next[j] = adj.diagnostics[k * nx + j].se_slope_total;
    }

    for (std::size_t path = 0; path < n; ++path) {
      std::span<const double> y = Y.slice(path, k);
      std::span<double> pk = p_slice(path, k);
      for (std::size_t j = 0; j < nx; ++j) {
        const RegressionDiagnostics& d = adj.diagnostics[k * nx + j];
        pk[j] = d.intercept + d.slope * B[path] +
                dt * value_or_zero(pb.coeffs.sigma_y, t, nodes[j], y[j], u[k]) * d.q;
      }
    }
  }
  return adj;
}

StateField variation_solve(const ControlProblem& pb, const ControlTrajectory& u,
                           std::span<const double> beta, const StateField& Y) {
  check_trajectory(pb, u);
  check_fields(pb, Y);
  const SpaceTimeGrid& grid = pb.grid;
  if (beta.size() != grid.nt()) throw std::invalid_argument("direction needs nt entries");
  for (double b : beta) {
    if (!std::isfinite(b)) throw std::invalid_argument("direction must be finite");
  }
  const GeneratorCache cache(pb, u, true);
  const std::vector<double> nodes = grid.nodes();
  const std::size_t nx = grid.nx(), nt = grid.nt();
  const double dt = grid.dt();
  StateField Z(Y.n_paths, grid, Y.seed, "variation");
  const long n_long = static_cast<long>(Y.n_paths);
#pragma omp parallel for schedule(static) if (pb.exec == Execution::parallel)
  for (long pl = 0; pl < n_long; ++pl) {
    const std::size_t p = static_cast<std::size_t>(pl);
    std::vector<double> dy(nx);
    for (std::size_t k = 0; k < nt; ++k) {
      const double t = grid.t(k);
      const double dB = pb.paths.increment(p, k);
      std::span<const double> y = Y.slice(p, k);
      std::span<const double> z = std::as_const(Z).slice(p, k);
      std::span<double> next = Z.slice(p, k + 1);
      cache.derivative_at(k).op.apply(y, dy);
      for (std::size_t j = 0; j < nx; ++j) {
        const double x = nodes[j];
        const double drift = dy[j] * beta[k] +
                             value_or_zero(pb.coeffs.b_y, t, x, y[j], u[k]) * z[j] +
                             value_or_zero(pb.coeffs.b_u, t, x, y[j], u[k]) * beta[k];
        const double vol = value_or_zero(pb.coeffs.sigma_y, t, x, y[j], u[k]) * z[j] +
                           value_or_zero(pb.coeffs.sigma_u, t, x, y[j], u[k]) * beta[k];
        next[j] = z[j] + dt * drift + vol * dB;
      }
      cache.at(k).op.apply_add(z, dt, next);
    }
  }
  return Z;
}

std::vector<double> smp_gradient_paths(const ControlProblem& pb, const ControlTrajectory& u,
                                       const StateField& Y, const AdjointField& adj) {
  check_trajectory(pb, u);
  check_fields(pb, Y);
  const SpaceTimeGrid& grid = pb.grid;
  const std::size_t n = Y.n_paths, nx = grid.nx(), nt = grid.nt();
  const std::vector<double> c = cost_weights(pb);
  const std::vector<double> m = rho_trapezoid_weights(pb.law.rho1, pb.law.rho2, grid);
  const std::vector<double> nodes = grid.nodes();
  const GeneratorCache cache(pb, u, true);
  std::vector<double> out(n * nt);
  const long n_long = static_cast<long>(n);
#pragma omp parallel for schedule(static) if (pb.exec == Execution::parallel)
  for (long pl = 0; pl < n_long; ++pl) {
    const std::size_t p = static_cast<std::size_t>(pl);
    std::vector<double> dy(nx);
    for (std::size_t k = 0; k < nt; ++k) {
      const double t = grid.t(k);
      std::span<const double> y = Y.slice(p, k);
      cache.derivative_at(k).op.apply(y, dy);
      double s = 0.0;
      for (std::size_t j = 0; j < nx; ++j) {
        const double x = nodes[j];
        const double fu = c[j] == 0.0 ? 0.0 : c[j] * pb.cost.f_u(t, x, y[j], u[k]);
        const double bu = value_or_zero(pb.coeffs.b_u, t, x, y[j], u[k]);
        const double su = value_or_zero(pb.coeffs.sigma_u, t, x, y[j], u[k]);
        s += fu + m[j] * (adj.p_at(p, k + 1, j) * (dy[j] + bu) + adj.q_at(k, j) * su);
      }
      out[p * nt + k] = s;
    }
  }
  return out;
}

std::vector<double> smp_gradient(const ControlProblem& pb, const ControlTrajectory& u,
                                 const StateField& Y, const AdjointField& adj) {
  const std::vector<double> per_path = smp_gradient_paths(pb, u, Y, adj);
  const std::size_t nt = pb.grid.nt(), n = Y.n_paths;
  std::vector<double> g(nt, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t k = 0; k < nt; ++k) g[k] += per_path[p * nt + k];
  }
  for (double& v : g) v /= static_cast<double>(n);
  return g;
}

Estimate directional_adjoint(const ControlProblem& pb, const ControlTrajectory& u,
                             std::span<const double> beta) {
  if (beta.size() != pb.grid.nt()) throw std::invalid_argument("direction needs nt entries");
  const StateField Y = forward(pb, u);
  const AdjointField adj = adjoint_solve(pb, u, Y);
  const std::vector<double> per_path = smp_gradient_paths(pb, u, Y, adj);
  const std::size_t nt = pb.grid.nt();
  std::vector<double> values(Y.n_paths, 0.0);
  for (std::size_t p = 0; p < Y.n_paths; ++p) {
    for (std::size_t k = 0; k < nt; ++k) values[p] += per_path[p * nt + k] * beta[k] * pb.grid.dt();
  }
  return estimate(values);
}

Estimate directional_variation(const ControlProblem& pb, const ControlTrajectory& u,
                               std::span<const double> beta) {
  const StateField Y = forward(pb, u);
  const StateField Z = variation_solve(pb, u, beta, Y);
  const SpaceTimeGrid& grid = pb.grid;
  const std::vector<double> c = cost_weights(pb);
  const std::vector<double> nodes = grid.nodes();
  const std::size_t nt = grid.nt(), nx = grid.nx();
  std::vector<double> values(Y.n_paths, 0.0);
  for (std::size_t p = 0; p < Y.n_paths; ++p) {
    double v = 0.0;
    for (std::size_t k = 0; k < nt; ++k) {
      const double t = grid.t(k);
      double s = 0.0;
      for (std::size_t j = 0; j < nx; ++j) {
        if (c[j] == 0.0) continue;
        const double y = Y.at(p, k, j);
        s += c[j] * (pb.cost.f_y(t, nodes[j], y, u[k]) * Z.at(p, k, j) +
                     pb.cost.f_u(t, nodes[j], y, u[k]) * beta[k]);
      }
      v += grid.dt() * s;
    }
    for (std::size_t j = 0; j < nx; ++j) {
      if (c[j] != 0.0) v += c[j] * pb.cost.g_y(Y.at(p, nt, j)) * Z.at(p, nt, j);
    }
    values[p] = v;
  }
  return estimate(values);
}

Estimate directional_fd(const ControlProblem& pb, const ControlTrajectory& u,
                        std::span<const double> beta, double a) {
  if (beta.size() != pb.grid.nt()) throw std::invalid_argument("direction needs nt entries");
  if (!(a > 0.0)) throw std::invalid_argument("finite-difference step must be > 0");
  ControlTrajectory up = u, down = u;
  for (std::size_t k = 0; k < u.size(); ++k) {
    up[k] += a * beta[k];
    down[k] -= a * beta[k];
  }
  const std::vector<double> jp = path_costs(pb, up, forward(pb, up));
  const std::vector<double> jm = path_costs(pb, down, forward(pb, down));
  std::vector<double> values(jp.size());
  for (std::size_t p = 0; p < jp.size(); ++p) values[p] = (jp[p] - jm[p]) / (2.0 * a);
  return estimate(values);
}

namespace {

struct Evaluation {
  Estimate J;
  std::vector<double> g;  // gradient density in time (or repeated scalar in constant mode)
};

Evaluation evaluate(const ControlProblem& pb, const ControlTrajectory& u, bool with_gradient,
                    bool constant_control) {
  const StateField Y = forward(pb, u);
  Evaluation ev{estimate(path_costs(pb, u, Y)), {}};
  if (with_gradient) {
    ev.g = smp_gradient(pb, u, Y, adjoint_solve(pb, u, Y));
    if (constant_control) {
      double total = 0.0;
      for (double v : ev.g) total += v * pb.grid.dt();
      std::fill(ev.g.begin(), ev.g.end(), total);
    }
  }
  return ev;
}

double projected_gradient_norm(const ControlledMaterialLaw& law, const ControlTrajectory& u,
                               const std::vector<double>& g) {
  double norm = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    norm = std::max(norm, std::abs(u[k] - law.project(u[k] - g[k])));
  }
  return norm;
}

}  // namespace

OptimizeResult optimize(const ControlProblem& pb, const ControlTrajectory& u0,
                        const OptimizerOptions& opts) {
  check_trajectory(pb, u0);
  if (!(opts.eta0 > 0.0) || !(opts.armijo_c > 0.0) || !(opts.gtol > 0.0)) {
    throw std::invalid_argument("optimizer options must be positive");
  }
  if (opts.constant_control) {
    for (double v : u0.u) {
      if (v != u0[0]) throw std::invalid_argument("constant-control mode needs a constant u0");
    }
  }
  const double dt = pb.grid.dt();
  // In constant mode the scalar gradient lives on a unit measure, not dt.
  const double measure = opts.constant_control ? 1.0 / static_cast<double>(u0.size()) : dt;

  OptimizeResult res;
  res.u = u0;
  Evaluation cur = evaluate(pb, res.u, true, opts.constant_control);
  double eta = opts.eta0;
  for (std::size_t iter = 0;; ++iter) {
    const double pg = projected_gradient_norm(pb.law, res.u, cur.g);
    DescentRecord rec{iter, cur.J.mean, cur.J.se, pg, 0.0};
    if (pg <= opts.gtol) {
      res.converged = true;
      res.trace.push_back(rec);
      break;
    }
    if (iter >= opts.max_outer) {
      res.trace.push_back(rec);
      break;
    }
    bool accepted = false;
    for (std::size_t bt = 0; bt <= opts.max_backtracks; ++bt) {
      ControlTrajectory trial = res.u;
      double decrease = 0.0;
      for (std::size_t k = 0; k < trial.size(); ++k) {
        trial[k] = pb.law.project(res.u[k] - eta * cur.g[k]);
        decrease += cur.g[k] * (trial[k] - res.u[k]) * measure;
      }
      Evaluation next = evaluate(pb, trial, false, opts.constant_control);
      if (next.J.mean <= cur.J.mean + opts.armijo_c * decrease) {
        rec.step = eta;
        res.trace.push_back(rec);
        res.u = std::move(trial);
        cur = evaluate(pb, res.u, true, opts.constant_control);
        eta *= 2.0;
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) {
      res.line_search_failed = true;
      res.trace.push_back(rec);
      break;
    }
  }
  res.gradient = cur.g;
  return res;
}

}  // namespace spdectl
