#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "spdectl/cli.hpp"

using namespace spdectl;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("spdectl_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.cfg";
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("defaults with a command") {
  const auto out = parse_config({"--command", "verify-kernel"});
  CHECK_FALSE(out.help);
  CHECK(out.config.command == "verify-kernel");
  CHECK(out.config.a1 == 1.0);
  CHECK(out.config.nx == 81);
  const auto pos = parse_config({"simulate"});
  CHECK(pos.config.command == "simulate");
}

TEST_CASE("config file values reach the manifest, flags override the file") {
  const auto dir = scratch_dir("manifest");
  const auto cfg = write_config(dir, "a1=1\na2=4\nrho1=1\nrho2=1\nnx=41\n");
  const auto out =
      parse_config({"verify-kernel", "--config", cfg.string(), "--nx", "21"});
  CHECK(out.config.a2 == 4.0);
  CHECK(out.config.nx == 21);
  std::ostringstream os;
  write_manifest(os, out.config);
  CHECK(os.str().find("lambda,0.33333333333333331\n") != std::string::npos);
  CHECK(os.str().find("nx,21\n") != std::string::npos);
}

TEST_CASE("invalid settings name the offending key") {
  const auto dir = scratch_dir("invalid");
  const auto cfg = write_config(dir, "a1=-1\n");
  try {
    parse_config({"verify-kernel", "--config", cfg.string()});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key == "a1");
  }
  const auto unknown = write_config(dir, "not_a_key=3\n");
  CHECK_THROWS_AS(parse_config({"verify-kernel", "--config", unknown.string()}), ConfigError);
  CHECK_THROWS_AS(parse_config({"verify-kernel", "--bogus", "1"}), ConfigError);
  CHECK_THROWS_AS(parse_config({"verify-kernel", "--nx", "many"}), ConfigError);
  RunConfig c;
  c.command = "simulate";
  c.a1 = -1.0;
  std::ostringstream log;
  CHECK(run(c, log) == 2);
}

TEST_CASE("help lists the keys") {
  const auto out = parse_config({"--help"});
  CHECK(out.help);
  CHECK(out.help_text.find("--n_paths") != std::string::npos);
}

TEST_CASE("verify-kernel passes with defaults") {
  const auto dir = scratch_dir("verify");
  RunConfig c;
  c.command = "verify-kernel";
  c.out_dir = dir.string();
  std::ostringstream log;
  CHECK(run(c, log) == 0);
  CHECK(fs::exists(dir / "manifest.csv"));
  const std::string csv = slurp(dir / "kernel_checks.csv");
  CHECK(csv.find(",fail") == std::string::npos);
}

TEST_CASE("simulate reports the noise variance and is reproducible") {
  RunConfig c;
  c.command = "simulate";
  c.x_min = -2;
  c.x_max = 2;
  c.nx = 21;
  c.T = 2.0;
  c.nt = 20;
  c.n_paths = 4000;
  c.sigma0 = 0.5;
  std::ostringstream log;
  const auto d1 = scratch_dir("sim1"), d2 = scratch_dir("sim2");
  c.out_dir = d1.string();
  REQUIRE(run(c, log) == 0);
  c.out_dir = d2.string();
  REQUIRE(run(c, log) == 0);
  const std::string s1 = slurp(d1 / "statistics.csv");
  CHECK(s1 == slurp(d2 / "statistics.csv"));
  // Last row is t = 2; variance should be sigma0^2 t = 0.5.
  std::istringstream is(s1);
  std::string line, last;
  while (std::getline(is, line)) if (!line.empty()) last = line;
  std::vector<double> cols;
  std::stringstream ls(last);
  for (std::string cell; std::getline(ls, cell, ',');) cols.push_back(std::stod(cell));
  REQUIRE(cols.size() == 5);
  CHECK(cols[0] == doctest::Approx(2.0));
  CHECK(cols[3] == doctest::Approx(0.5).epsilon(0.05));
}
