#include "spdectl/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "spdectl/brownian.hpp"
#include "spdectl/checks.hpp"
#include "spdectl/control.hpp"
#include "spdectl/linear.hpp"
#include "spdectl/medium.hpp"
#include "spdectl/picard.hpp"
#include "spdectl/presets.hpp"

namespace spdectl {

namespace {

void build_app(CLI::App& app, RunConfig& c) {
  app.set_config("--config", "", "key=value configuration file (flags override it)");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.option_defaults()->always_capture_default();

  app.add_option("command,--command", c.command, "verify-kernel | simulate | optimize")
      ->check(CLI::IsMember({"verify-kernel", "simulate", "optimize"}));

  auto* medium = "Medium";
  app.add_option("--a1", c.a1, "diffusivity for x <= 0")->group(medium);
  app.add_option("--a2", c.a2, "diffusivity for x > 0")->group(medium);
  app.add_option("--rho1", c.rho1, "density for x <= 0")->group(medium);
  app.add_option("--rho2", c.rho2, "density for x > 0")->group(medium);

  auto* grid = "Grid";
  app.add_option("--x_min", c.x_min, "left end of the spatial grid (< 0)")->group(grid);
  app.add_option("--x_max", c.x_max, "right end of the spatial grid (> 0)")->group(grid);
  app.add_option("--nx", c.nx, "number of spatial nodes; x = 0 must be a node")->group(grid);
  app.add_option("--T", c.T, "time horizon")->group(grid);
  app.add_option("--nt", c.nt, "number of time steps")->group(grid);

  auto* mc = "Monte Carlo";
  app.add_option("--n_paths", c.n_paths, "number of Brownian paths")->group(mc);
  app.add_option("--seed", c.seed, "master seed of the path bundle")->group(mc);
  app.add_option("--execution", c.execution, "parallel | serial")
      ->check(CLI::IsMember({"parallel", "serial"}))
      ->group(mc);

  auto* sim = "Simulation";
  app.add_option("--solver", c.solver, "linear | picard | euler-oracle")
      ->check(CLI::IsMember({"linear", "picard", "euler-oracle"}))
      ->group(sim);
  app.add_option("--ic", c.ic, "initial condition: zero | constant | bump")
      ->check(CLI::IsMember({"zero", "constant", "bump"}))
      ->group(sim);
  app.add_option("--ic_value", c.ic_value, "constant value, or bump height")->group(sim);
  app.add_option("--ic_center", c.ic_center, "bump center")->group(sim);
  app.add_option("--ic_width", c.ic_width, "bump width")->group(sim);
  app.add_option("--sigma0", c.sigma0, "volatility sigma = sigma0 + sigma1 y")->group(sim);
  app.add_option("--sigma1", c.sigma1, "volatility slope")->group(sim);
  app.add_option("--b0", c.b0, "drift b = b0 + b1 y")->group(sim);
  app.add_option("--b1", c.b1, "drift slope")->group(sim);
  app.add_option("--tol", c.tol, "Picard tolerance on h_n")->group(sim);
  app.add_option("--max_iter", c.max_iter, "Picard iteration limit")->group(sim);
  app.add_option("--tau_min_ratio", c.tau_min_ratio,
                 "kernel treated as identity below this fraction of dt")
      ->group(sim);
  app.add_option("--aggregate", c.aggregate, "write t,x,mean,variance,stderr instead of paths")
      ->group(sim);

  auto* ctl = "Control";
  app.add_option("--preset", c.preset, "temp-control | heat-storage")
      ->check(CLI::IsMember({"temp-control", "heat-storage"}))
      ->group(ctl);
  app.add_option("--theta", c.theta, "temp-control weight of u^2")->group(ctl);
  app.add_option("--gamma", c.gamma, "temp-control terminal weight")->group(ctl);
  app.add_option("--gamma1", c.gamma1, "heat-storage running state weight")->group(ctl);
  app.add_option("--gamma2", c.gamma2, "heat-storage weight of u^2")->group(ctl);
  app.add_option("--gamma3", c.gamma3, "heat-storage terminal weight")->group(ctl);
  app.add_option("--u_min", c.u_min, "lower end of the admissible controls")->group(ctl);
  app.add_option("--u_max", c.u_max, "upper end of the admissible controls")->group(ctl);
  app.add_option("--u0", c.u0, "initial constant control")->group(ctl);
  app.add_option("--cost_x_min", c.cost_x_min, "left end of the cost domain")->group(ctl);
  app.add_option("--cost_x_max", c.cost_x_max, "right end of the cost domain")->group(ctl);
  app.add_option("--eta0", c.eta0, "initial step length")->group(ctl);
  app.add_option("--armijo_c", c.armijo_c, "sufficient decrease constant")->group(ctl);
  app.add_option("--gtol", c.gtol, "projected gradient tolerance")->group(ctl);
  app.add_option("--max_outer", c.max_outer, "maximum descent iterations")->group(ctl);
  app.add_option("--constant_control", c.constant_control, "optimize over constant controls")
      ->group(ctl);

  app.add_option("--out_dir", c.out_dir, "output directory (default from SPDECTL_OUT_DIR)");
}

void require(bool ok, const std::string& key, const std::string& msg) {
  if (!ok) throw ConfigError(key, key + ": " + msg);
}

InitialCondition make_ic(const RunConfig& c) {
  if (c.ic == "constant") return InitialCondition::constant(c.ic_value);
  if (c.ic == "bump") return InitialCondition::bump(c.ic_center, c.ic_width, c.ic_value);
  return InitialCondition::zero();
}

PresetParams make_preset_params(const RunConfig& c) {
  PresetParams p;
  p.theta = c.theta;
  p.gamma = c.gamma;
  p.gamma1 = c.gamma1;
  p.gamma2 = c.gamma2;
  p.gamma3 = c.gamma3;
  p.sigma0 = c.sigma0;
  p.u_min = c.u_min;
  p.u_max = c.u_max;
  p.cost_lo = c.cost_x_min;
  p.cost_hi = c.cost_x_max;
  return p;
}

Execution execution_of(const RunConfig& c) {
  return c.execution == "serial" ? Execution::serial : Execution::parallel;
}

std::ofstream open_output(const RunConfig& c, const std::string& name) {
  std::ofstream os(std::filesystem::path(c.out_dir) / name);
  if (!os) throw std::runtime_error("cannot write " + name + " in " + c.out_dir);
  return os;
}

void write_h_csv(const RunConfig& c, const PicardDiagnostics& d) {
  std::ofstream os = open_output(c, "picard_diagnostics.csv");
  os << "iteration,h_n\n";
  for (std::size_t n = 0; n < d.h.size(); ++n) os << n << ',' << format_double(d.h[n]) << '\n';
}

int run_verify(const RunConfig& c, std::ostream& log) {
  const CompositeMedium medium(c.a1, c.a2, c.rho1, c.rho2);
  const std::string id = "a1=" + format_double(c.a1) + ";a2=" + format_double(c.a2) +
                         ";rho1=" + format_double(c.rho1) + ";rho2=" + format_double(c.rho2);
  const std::vector<CheckResult> rows = kernel_check_suite(medium, id);
  std::ofstream os = open_output(c, "kernel_checks.csv");
  write_checks_csv(os, rows);
  bool all = true;
  for (const CheckResult& r : rows) {
    log << (r.pass ? "pass " : "FAIL ") << r.name << "  max_abs_error=" << r.max_abs_error
        << (r.detail.empty() ? "" : "  (" + r.detail + ")") << '\n';
    all = all && r.pass;
  }
  return all ? 0 : 1;
}

int run_simulate(const RunConfig& c, std::ostream& log) {
  const CompositeMedium medium(c.a1, c.a2, c.rho1, c.rho2);
  const SpaceTimeGrid grid(c.x_min, c.x_max, c.nx, c.T, c.nt);
  const InitialCondition ic = make_ic(c);
  const BrownianPaths paths = sample_paths(c.seed, grid, c.n_paths);
  const CoefficientSpec coeffs = CoefficientSpec::affine(c.b0, c.b1, c.sigma0, c.sigma1);
  const Execution exec = execution_of(c);
  const std::size_t nx = grid.nx();

  FieldMoments moments(c.aggregate ? grid.field_size() : 0);
  std::ofstream field_os;
  if (c.aggregate) {
    // opened at the end
  } else {
    field_os = open_output(c, "field.csv");
    field_os << "path,t,x,Y\n";
  }
  const PathSink sink = [&](std::size_t p, std::span<const double> field) {
    if (c.aggregate) {
      moments.add(field);
      return;
    }
    for (std::size_t k = 0; k <= grid.nt(); ++k) {
      for (std::size_t j = 0; j < nx; ++j) {
        field_os << p << ',' << format_double(grid.t(k)) << ',' << format_double(grid.x(j)) << ','
                 << format_double(field[k * nx + j]) << '\n';
      }
    }
  };

  int status = 0;
  if (c.solver == "linear") {
    solve_linear(medium, ic, c.sigma0, grid, paths, exec, sink);
  } else if (c.solver == "euler-oracle") {
    euler_oracle(medium, coeffs, ic, grid, paths, exec, sink);
  } else {
    PicardOptions opts;
    opts.tol = c.tol;
    opts.max_iter = c.max_iter;
    opts.tau_min_ratio = c.tau_min_ratio;
    try {
      const PicardDiagnostics d = picard_solve(medium, coeffs, ic, grid, paths, opts, exec, sink);
      write_h_csv(c, d);
      log << "picard converged: iterations=" << d.iterations << '\n';
    } catch (const PicardNonConvergence& e) {
      write_h_csv(c, e.diagnostics);
      log << "error: " << e.what() << '\n';
      status = 1;
    }
  }

  if (c.aggregate) {
    std::ofstream os = open_output(c, "statistics.csv");
    os << "t,x,mean,variance,stderr\n";
    for (std::size_t k = 0; k <= grid.nt(); ++k) {
      for (std::size_t j = 0; j < nx; ++j) {
        const std::size_t i = k * nx + j;
        os << format_double(grid.t(k)) << ',' << format_double(grid.x(j)) << ','
           << format_double(moments.mean()[i]) << ',' << format_double(moments.variance(i)) << ','
           << format_double(moments.standard_error(i)) << '\n';
      }
    }
  }
  log << "simulate (" << c.solver << "): " << c.n_paths << " paths written to " << c.out_dir << '\n';
  return status;
}

int run_optimize(const RunConfig& c, std::ostream& log) {
  const Preset preset = make_preset(c.preset, make_preset_params(c));
  const SpaceTimeGrid grid(c.x_min, c.x_max, c.nx, c.T, c.nt);
  preset.cost.validate(grid, c.u_min, c.u_max);
  ControlProblem problem{preset.law,  preset.coeffs, preset.cost,
                         make_ic(c),  grid,          sample_paths(c.seed, grid, c.n_paths),
                         execution_of(c)};
  OptimizerOptions opts;
  opts.eta0 = c.eta0;
  opts.armijo_c = c.armijo_c;
  opts.gtol = c.gtol;
  opts.max_outer = c.max_outer;
  opts.constant_control = c.constant_control;
  const OptimizeResult res = optimize(problem, ControlTrajectory::constant(grid.nt(), c.u0), opts);

  std::ofstream trace = open_output(c, "descent_trace.csv");
  trace << "iter,J,J_stderr,grad_inf_norm,step\n";
  for (const DescentRecord& r : res.trace) {
    trace << r.iter << ',' << format_double(r.J) << ',' << format_double(r.J_stderr) << ','
          << format_double(r.grad_inf_norm) << ',' << format_double(r.step) << '\n';
  }
  std::ofstream control = open_output(c, "optimal_control.csv");
  control << "t,u\n";
  for (std::size_t k = 0; k < res.u.size(); ++k) {
    control << format_double(grid.t(k)) << ',' << format_double(res.u[k]) << '\n';
  }
  const DescentRecord& last = res.trace.back();
  log << "optimize (" << c.preset << "): J=" << last.J << " +- " << last.J_stderr
      << "  projected gradient=" << last.grad_inf_norm << "  iterations=" << last.iter << '\n';
  if (res.line_search_failed) log << "error: line search failed; best control so far written\n";
  else if (!res.converged) log << "error: gradient tolerance not reached within max_outer\n";
  return res.converged ? 0 : 1;
}

}  // namespace

ParseOutcome parse_config(const std::vector<std::string>& args) {
  ParseOutcome out;
  if (const char* env = std::getenv("SPDECTL_OUT_DIR"); env && *env) {
    out.config.out_dir = env;
    out.config.out_dir_source = "env";
  }
  CLI::App app("Stochastic heat equation in a two-material medium: kernel checks, "
               "Monte Carlo simulation and optimal control.",
               "spdectl");
  const std::string env_dir = out.config.out_dir;
  build_app(app, out.config);
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out.help = true;
    out.help_text = app.help();
    return out;
  } catch (const CLI::ParseError& e) {
    std::string key = e.get_name();
    throw ConfigError(key, e.what());
  }
  if (app.count("--out_dir") > 0) out.config.out_dir_source = "config";
  validate_config(out.config);
  return out;
}

void validate_config(const RunConfig& c) {
  require(!c.command.empty(), "command", "required (verify-kernel, simulate or optimize)");
  for (auto [key, v] : {std::pair{"a1", c.a1}, {"a2", c.a2}, {"rho1", c.rho1}, {"rho2", c.rho2}}) {
    require(std::isfinite(v) && v > 0.0, key, "must be a positive number");
  }
  require(std::isfinite(c.x_min) && c.x_min < 0.0, "x_min", "must be negative");
  require(std::isfinite(c.x_max) && c.x_max > 0.0, "x_max", "must be positive");
  require(c.nx >= 3, "nx", "must be at least 3");
  require(std::isfinite(c.T) && c.T > 0.0, "T", "must be positive");
  require(c.nt >= 1, "nt", "must be at least 1");
  try {
    SpaceTimeGrid(c.x_min, c.x_max, c.nx, c.T, c.nt);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("nx", std::string("nx: ") + e.what());
  }
  require(c.n_paths >= 1, "n_paths", "must be at least 1");
  require(c.ic_width > 0.0, "ic_width", "must be positive");
  require(std::isfinite(c.ic_value), "ic_value", "must be finite");
  for (auto [key, v] : {std::pair{"sigma0", c.sigma0}, {"sigma1", c.sigma1}, {"b0", c.b0},
                        {"b1", c.b1}}) {
    require(std::isfinite(v), key, "must be finite");
  }
  require(c.tol > 0.0, "tol", "must be positive");
  require(c.max_iter >= 1, "max_iter", "must be at least 1");
  require(c.tau_min_ratio >= 0.0 && c.tau_min_ratio < 1.0, "tau_min_ratio", "must lie in [0, 1)");
  if (c.command == "simulate" && c.solver == "linear") {
    require(c.b0 == 0.0 && c.b1 == 0.0 && c.sigma1 == 0.0, "solver",
            "linear solver needs b0 = b1 = sigma1 = 0; use picard or euler-oracle");
  }
  if (c.command == "optimize") {
    require(c.u_min > 0.0, "u_min", "must be positive (a = u on x <= 0)");
    require(c.u_max >= c.u_min, "u_max", "must be >= u_min");
    require(c.u0 >= c.u_min && c.u0 <= c.u_max, "u0", "must lie in [u_min, u_max]");
    require(c.cost_x_min < c.cost_x_max, "cost_x_max", "must exceed cost_x_min");
    require(c.cost_x_min >= c.x_min && c.cost_x_max <= c.x_max, "cost_x_min",
            "cost domain must lie inside [x_min, x_max]");
    const SpaceTimeGrid grid(c.x_min, c.x_max, c.nx, c.T, c.nt);
    for (auto [key, v] : {std::pair{"cost_x_min", c.cost_x_min}, {"cost_x_max", c.cost_x_max}}) {
      const double snapped = grid.x(grid.nearest_node(v));
      require(std::abs(snapped - v) <= 1e-9 * grid.dx(), key, "must be a grid node");
    }
    require(c.eta0 > 0.0, "eta0", "must be positive");
    require(c.armijo_c > 0.0 && c.armijo_c < 1.0, "armijo_c", "must lie in (0, 1)");
    require(c.gtol > 0.0, "gtol", "must be positive");
  }
}

void write_manifest(std::ostream& os, const RunConfig& c) {
  auto row = [&](const std::string& k, const std::string& v) { os << k << ',' << v << '\n'; };
  auto num = [&](const std::string& k, double v) { row(k, format_double(v)); };
  auto cnt = [&](const std::string& k, std::uint64_t v) { row(k, std::to_string(v)); };
  os << "key,value\n";
  row("command", c.command);
  num("a1", c.a1);
  num("a2", c.a2);
  num("rho1", c.rho1);
  num("rho2", c.rho2);
  num("lambda", CompositeMedium(c.a1, c.a2, c.rho1, c.rho2).lambda());
  num("x_min", c.x_min);
  num("x_max", c.x_max);
  cnt("nx", c.nx);
  num("T", c.T);
  cnt("nt", c.nt);
  cnt("n_paths", c.n_paths);
  cnt("seed", c.seed);
  row("execution", c.execution);
  row("solver", c.solver);
  row("ic", c.ic);
  num("ic_value", c.ic_value);
  num("ic_center", c.ic_center);
  num("ic_width", c.ic_width);
  num("sigma0", c.sigma0);
  num("sigma1", c.sigma1);
  num("b0", c.b0);
  num("b1", c.b1);
  num("tol", c.tol);
  cnt("max_iter", c.max_iter);
  num("tau_min_ratio", c.tau_min_ratio);
  row("aggregate", c.aggregate ? "true" : "false");
  row("preset", c.preset);
  num("theta", c.theta);
  num("gamma", c.gamma);
  num("gamma1", c.gamma1);
  num("gamma2", c.gamma2);
  num("gamma3", c.gamma3);
  num("u_min", c.u_min);
  num("u_max", c.u_max);
  num("u0", c.u0);
  num("cost_x_min", c.cost_x_min);
  num("cost_x_max", c.cost_x_max);
  num("eta0", c.eta0);
  num("armijo_c", c.armijo_c);
  num("gtol", c.gtol);
  cnt("max_outer", c.max_outer);
  row("constant_control", c.constant_control ? "true" : "false");
  row("out_dir", c.out_dir);
  row("out_dir_source", c.out_dir_source);
}

int run(const RunConfig& c, std::ostream& log) {
  try {
    validate_config(c);
    std::filesystem::create_directories(c.out_dir);
    {
      std::ofstream manifest = open_output(c, "manifest.csv");
      write_manifest(manifest, c);
    }
    if (c.command == "verify-kernel") return run_verify(c, log);
    if (c.command == "simulate") return run_simulate(c, log);
    return run_optimize(c, log);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    log << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  ParseOutcome parsed;
  try {
    parsed = parse_config(args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  if (parsed.help) {
    std::cout << parsed.help_text;
    return 0;
  }
  return run(parsed.config, std::cerr);
}

}  // namespace spdectl
