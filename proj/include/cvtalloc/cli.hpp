#pragma once

// Command-line front end: `cvtalloc <subcommand> [flags]`.
//
// Every subcommand accepts --config FILE (JSON); flags given on the command
// line override the file. Exit codes: 0 success, 1 usage or configuration
// error, 2 solver or check failure.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvtalloc/density.hpp"
#include "cvtalloc/errors.hpp"
#include "cvtalloc/sim.hpp"
#include "cvtalloc/tessellation.hpp"

namespace cvtalloc::cli {

enum class Subcommand { Cvt, StaticAlloc, ShiftCheck, DynamicSim };

enum class UsageErrorKind { UnknownFlag, MissingRequired, BadValue, Usage };

class UsageError : public std::runtime_error {
 public:
  UsageError(UsageErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  UsageErrorKind kind() const noexcept { return kind_; }

 private:
  UsageErrorKind kind_;
};

struct CvtArgs {
  Domain1D domain;
  std::size_t n = 0;
  DensitySpec density = DensitySpec::uniform(0.0, 1.0);
  std::vector<double> init;  // empty: equally spaced
  std::optional<double> tol;
  int max_iter = 10'000;
};

struct StaticAllocArgs {
  Domain1D domain;
  std::size_t n = 0;
  DensitySpec density = DensitySpec::uniform(0.0, 1.0);
  double r = 0.0;
  bool write_csv = false;
  bool cross_validate = false;
};

struct ShiftCheckArgs {
  Domain1D domain;
  std::size_t n = 0;
  double sigma2 = 0.0;
  double mu = 0.0;
  double delta = 0.0;
  double tol = 1e-7;
};

struct CommandSpec {
  Subcommand subcommand = Subcommand::Cvt;
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  CvtArgs cvt;
  StaticAllocArgs static_alloc;
  ShiftCheckArgs shift_check;
  sim::Scenario scenario;
  /// Set when --help was requested; execute() prints it and returns 0.
  std::optional<std::string> help;
};

/// argv[0] is the program name. Reads --config when given. Throws
/// UsageError for bad flags and missing required values, and
/// cvtalloc::Error for invalid configuration contents.
CommandSpec parse_args(const std::vector<std::string>& argv);

/// Runs the command, writes its artifacts under out_dir, prints a JSON
/// summary to `out` and diagnostics to `err`. Returns the exit code.
int execute(const CommandSpec& spec, std::ostream& out, std::ostream& err);

/// parse_args + execute with error mapping; what main() calls.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

/// Exit code for a library error: 2 for solver and check failures, 1 for
/// invalid input.
int exit_code_for(const Error& e);

}  // namespace cvtalloc::cli
