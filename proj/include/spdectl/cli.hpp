#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace spdectl {

/// Fully resolved run configuration. Every field is a config key of the same
/// name, settable as `key=value` in a config file or `--key value` on the
/// command line (flags win).
struct RunConfig {
  std::string command;  // verify-kernel | simulate | optimize

  double a1 = 1.0, a2 = 1.0, rho1 = 1.0, rho2 = 1.0;
  double x_min = -4.0, x_max = 4.0;
  std::size_t nx = 81;
  double T = 1.0;
  std::size_t nt = 100;

  std::size_t n_paths = 1000;
  std::uint64_t seed = 20240611;
  std::string execution = "parallel";  // parallel | serial

  std::string solver = "linear";  // linear | picard | euler-oracle
  std::string ic = "zero";        // zero | constant | bump
  double ic_value = 1.0, ic_center = 0.0, ic_width = 0.5;
  double sigma0 = 0.5, sigma1 = 0.0, b0 = 0.0, b1 = 0.0;
  double tol = 1e-6;
  std::size_t max_iter = 25;
  double tau_min_ratio = 0.1;
  bool aggregate = true;

  std::string preset = "temp-control";
  double theta = 1.0, gamma = 1.0, gamma1 = 1.0, gamma2 = 1.0, gamma3 = 1.0;
  double u_min = 0.1, u_max = 2.0, u0 = 0.8;
  double cost_x_min = -1.0, cost_x_max = 1.0;
  double eta0 = 0.1, armijo_c = 1e-4, gtol = 1e-4;
  std::size_t max_outer = 100;
  bool constant_control = false;

  std::string out_dir = "out";
  std::string out_dir_source = "default";  // default | env | config
};

/// Invalid configuration; `key` names the offending setting.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key_, const std::string& what)
      : std::runtime_error(what), key(std::move(key_)) {}
  std::string key;
};

/// Parses `args` (without the program name). A `--config FILE` flag reads
/// key=value lines first. Throws ConfigError; `help` is set when --help was
/// requested, with the usage text in `help_text`.
struct ParseOutcome {
  RunConfig config;
  bool help = false;
  std::string help_text;
};
ParseOutcome parse_config(const std::vector<std::string>& args);

/// Checks cross-key invariants; throws ConfigError naming the key.
void validate_config(const RunConfig& cfg);

/// `key,value` rows of the resolved configuration plus derived quantities.
void write_manifest(std::ostream& os, const RunConfig& cfg);

/// Runs the command; returns 0 on success, 1 on failed checks or numerical
/// non-convergence, 2 on configuration errors.
int run(const RunConfig& cfg, std::ostream& log);

/// Entry point used by the executable.
int cli_main(int argc, char** argv);

}  // namespace spdectl
