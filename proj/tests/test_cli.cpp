#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cvtalloc/cli.hpp"

using namespace cvtalloc;
using namespace cvtalloc::cli;
namespace fs = std::filesystem;

namespace {

UsageErrorKind usage_kind(const std::vector<std::string>& argv) {
  try {
    parse_args(argv);
  } catch (const UsageError& e) {
    return e.kind();
  }
  FAIL("expected UsageError");
  return UsageErrorKind::Usage;
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  return d;
}

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "cvtalloc");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const std::string& body) {
  const auto p = fs::temp_directory_path() / name;
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST_CASE("parse a cvt command") {
  const auto spec = parse_args({"cvtalloc", "cvt", "--domain", "0,15", "--n", "3", "--density", "uniform"});
  CHECK(spec.subcommand == Subcommand::Cvt);
  CHECK(spec.cvt.domain.a == 0.0);
  CHECK(spec.cvt.domain.b == 15.0);
  CHECK(spec.cvt.n == 3);
  CHECK(spec.cvt.density == DensitySpec::uniform(0, 15));
  CHECK(spec.cvt.init.empty());
  CHECK(spec.out_dir == fs::path("."));
}

TEST_CASE("global flags may come before or after the subcommand") {
  const auto a = parse_args({"cvtalloc", "--out", "/tmp/x", "cvt", "--domain", "0,1", "--n", "2", "--density", "uniform"});
  const auto b = parse_args({"cvtalloc", "cvt", "--domain", "0,1", "--n", "2", "--density", "uniform", "--out", "/tmp/x"});
  CHECK(a.out_dir == fs::path("/tmp/x"));
  CHECK(b.out_dir == fs::path("/tmp/x"));
  CHECK(parse_args({"cvtalloc", "--seed", "9", "dynamic-sim"}).scenario.seed == 9);
}

TEST_CASE("usage errors") {
  CHECK(usage_kind({"cvtalloc", "cvt", "--domain", "0,15", "--density", "uniform"}) == UsageErrorKind::MissingRequired);
  CHECK(usage_kind({"cvtalloc", "cvt", "--domain", "0,15", "--n", "3", "--density", "uniform", "--bogus", "1"}) ==
        UsageErrorKind::UnknownFlag);
  CHECK(usage_kind({"cvtalloc", "cvt", "shift-check"}) == UsageErrorKind::Usage);
  CHECK(usage_kind({"cvtalloc"}) == UsageErrorKind::Usage);
  CHECK(usage_kind({"cvtalloc", "cvt", "--domain", "0,15", "--n", "three", "--density", "uniform"}) ==
        UsageErrorKind::BadValue);
  CHECK(usage_kind({"cvtalloc", "cvt", "--domain", "0,15", "--n", "0", "--density", "uniform"}) ==
        UsageErrorKind::BadValue);
  CHECK(usage_kind({"cvtalloc", "--seed", "-3", "dynamic-sim"}) == UsageErrorKind::BadValue);
  CHECK(usage_kind({"cvtalloc", "dynamic-sim", "--rounds-per-step", "x"}) == UsageErrorKind::BadValue);
  CHECK(invoke({"cvt", "--n", "3"}).code == 1);
}

TEST_CASE("help exits cleanly") {
  const auto r = invoke({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("static-alloc") != std::string::npos);
}

TEST_CASE("cvt writes the generator trajectory") {
  const auto dir = fresh_dir("cvtalloc_cli_cvt");
  const auto r = invoke({"cvt", "--domain", "0,15", "--n", "3", "--density", "uniform", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto summary = nlohmann::json::parse(r.out);
  CHECK(summary["converged"] == true);
  const auto g = summary["generators"].get<std::vector<double>>();
  REQUIRE(g.size() == 3);
  CHECK(std::fabs(g[0] - 2.5) < 1e-9);
  CHECK(std::fabs(g[1] - 7.5) < 1e-9);
  CHECK(std::fabs(g[2] - 12.5) < 1e-9);

  const auto csv = slurp(dir / "generators.csv");
  CHECK(csv.rfind("iter,i,z_i,cell_left,cell_right\n", 0) == 0);
  CHECK(csv.find("final,1,2.5,0,5\n") != std::string::npos);
  CHECK(csv.find("final,2,7.5,5,10\n") != std::string::npos);
  CHECK(csv.find("final,3,12.5,10,15\n") != std::string::npos);
  CHECK(csv.find("\n0,1,") != std::string::npos);
}

TEST_CASE("cvt with a custom start") {
  const auto dir = fresh_dir("cvtalloc_cli_cvt_init");
  const auto r = invoke({"cvt", "--domain", "0,1", "--n", "2", "--density", "uniform", "--init", "0.1,0.2", "--out",
                         dir.string()});
  REQUIRE(r.code == 0);
  CHECK(slurp(dir / "generators.csv").find("\n0,1,0.1,0,0.15\n") != std::string::npos);
  CHECK(invoke({"cvt", "--domain", "0,1", "--n", "3", "--density", "uniform", "--init", "0.1,0.2", "--out",
                dir.string()})
            .code == 1);
}

TEST_CASE("static-alloc on the symmetric gaussian") {
  const auto dir = fresh_dir("cvtalloc_cli_static");
  const auto r = invoke({"static-alloc", "--domain", "0,100", "--n", "50", "--density", "gaussian:mu=free,sigma2=4",
                         "--r", "2500", "--csv", "--cross-validate", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "static_alloc.json"));
  CHECK(std::fabs(j["v_k"].get<double>() - 50.0) < 1e-6);
  CHECK(std::fabs(j["sum"].get<double>() - 2500.0) < 1e-6);
  CHECK(j["centroids"].size() == 50);
  CHECK(j["residual_norm"].get<double>() < 1e-9);
  CHECK(j["cross_validation"]["pass"] == true);
  CHECK(nlohmann::json::parse(r.out) == j);
  const auto csv = slurp(dir / "tessellation.csv");
  CHECK(csv.rfind("i,z_i,cell_left,cell_right\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 51);
}

TEST_CASE("static-alloc errors map to exit codes") {
  const auto dir = fresh_dir("cvtalloc_cli_static_err");
  // No free parameter: configuration error.
  CHECK(invoke({"static-alloc", "--domain", "0,100", "--n", "5", "--density", "gaussian:mu=3,sigma2=4", "--r", "250",
                "--out", dir.string()})
            .code == 1);
  // r/N outside the domain.
  CHECK(invoke({"static-alloc", "--domain", "0,100", "--n", "5", "--density", "gaussian:mu=free,sigma2=4", "--r",
                "900", "--out", dir.string()})
            .code == 1);
}

TEST_CASE("shift-check") {
  const auto dir = fresh_dir("cvtalloc_cli_shift");
  const auto r = invoke({"shift-check", "--domain", "0,100", "--n", "5", "--sigma2", "4", "--mu", "50", "--delta", "2",
                         "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "shift_check.json"));
  CHECK(j["pass"] == true);
  CHECK(j["max_deviation"].get<double>() < 1e-7);
  CHECK(j["mu_shifted"].get<double>() == 48.0);
  // A shift that pushes mass off the domain fails the width guard.
  CHECK(invoke({"shift-check", "--domain", "49,51", "--n", "3", "--sigma2", "4", "--mu", "50", "--delta", "5", "--out",
                dir.string()})
            .code == 2);
}

TEST_CASE("config file values and flag precedence") {
  const auto dir = fresh_dir("cvtalloc_cli_config");
  const auto cfg = write_config("cvtalloc_cli_cvt.json",
                                R"({"domain": [0, 15], "n": 5, "density": {"family": "uniform"}})");
  const auto from_file = parse_args({"cvtalloc", "cvt", "--config", cfg.string()});
  CHECK(from_file.cvt.n == 5);
  CHECK(from_file.cvt.domain.b == 15.0);
  const auto overridden = parse_args({"cvtalloc", "cvt", "--config", cfg.string(), "--n", "3"});
  CHECK(overridden.cvt.n == 3);
  CHECK(overridden.cvt.domain.b == 15.0);

  const auto unknown = write_config("cvtalloc_cli_bad.json", R"({"domain": [0, 15], "n": 5, "colour": 1})");
  CHECK(invoke({"cvt", "--config", unknown.string()}).code == 1);
  CHECK(invoke({"cvt", "--config", "/nonexistent/cfg.json"}).code == 1);
}

TEST_CASE("dynamic-sim writes its outputs") {
  const auto dir = fresh_dir("cvtalloc_cli_sim");
  const auto cfg = write_config("cvtalloc_cli_sim.json", R"({
    "n_agents": 4, "horizon": 12, "domain": [0, 600], "sigma2": 100,
    "power_schedule": {"sinusoid": {"mean_per_agent": 300, "amplitude_per_agent": 20, "period_steps": 144}},
    "setpoints_f": [70, 71, 72, 73],
    "setpoint_changes": [{"step": 6, "agent": 1, "delta_f": 3}]
  })");
  const auto r = invoke({"dynamic-sim", "--config", cfg.string(), "--seed", "5", "--out", dir.string()});
  REQUIRE(r.code == 0);
  for (const char* f : {"trace.csv", "swaps.csv", "metrics.json", "powers.csv", "total_vs_available.csv",
                        "temperatures.csv"})
    CHECK(fs::exists(dir / f));
  const auto first = slurp(dir / "trace.csv");
  REQUIRE(invoke({"dynamic-sim", "--config", cfg.string(), "--seed", "5", "--out", dir.string()}).code == 0);
  CHECK(slurp(dir / "trace.csv") == first);
  CHECK(nlohmann::json::parse(r.out).contains("l2_power_error"));
}

TEST_CASE("dynamic-sim with a horizon mismatch exits 1") {
  const auto cfg = write_config("cvtalloc_cli_sim_bad.json", R"({
    "n_agents": 3, "horizon": 5, "domain": [0, 600], "power_schedule": [900, 900, 900], "setpoints_f": 72
  })");
  const auto r = invoke({"dynamic-sim", "--config", cfg.string(), "--out", fresh_dir("cvtalloc_cli_sim_bad").string()});
  CHECK(r.code == 1);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("exit codes for library errors") {
  CHECK(exit_code_for(Error(ErrorKind::SolverDiverged, "x")) == 2);
  CHECK(exit_code_for(Error(ErrorKind::DomainTooNarrow, "x")) == 2);
  CHECK(exit_code_for(Error(ErrorKind::InvalidScenario, "x")) == 1);
  CHECK(exit_code_for(Error(ErrorKind::InvalidDensitySpec, "x")) == 1);
}
