#pragma once

#include "malab/barriers.hpp"
#include "malab/io.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace malab {

inline constexpr const char* kVersion = "0.3.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,    // I/O and unexpected errors
  kExitInvalid = 2,    // schema, parse and precondition errors
  kExitNumerical = 3,  // iteration limits, instabilities, geometry failures
  kExitBusy = 4,       // another run holds the output directory
};

/// Run-level settings that are not part of the experiment itself. The thread
/// count never enters deterministic outputs.
struct RunOptions {
  std::optional<std::string> out_dir;  // overrides config "out"
  std::optional<std::uint64_t> seed;   // overrides config "seed"
  int threads = 1;
};

struct RunOutcome {
  int exit_code = kExitOk;
  std::string out_dir;
  std::vector<std::string> files;  // paths written, in order
  json report;                     // report.json contents, or the error document
};

/// Executes one experiment config. Every output is written atomically; on
/// failure an error document {"error": {...}} is written to error.json when
/// the output directory is usable, and is always returned in the outcome.
///
/// Tasks: solve, power, eigen, barrier-check, profile, check, convergence.
RunOutcome run_experiment(const json& config, const RunOptions& opts = {});

/// FNV-1a (64 bit) of the canonical dump of the config, as 16 hex digits.
std::string config_hash(const json& config);

/// Variant by name ("LipschitzSub", ...) with parameters {"n", "a", "D", "alpha", "s"}.
BarrierSpec barrier_from_json(const std::string& variant, const json& params);

/// "const:<c>", "distpow:<p>" (f = dist^p) or a CSV path with node_x, node_y, value.
GridFunction rhs_from_string(const GridPtr& grid, const std::string& rhs);

}  // namespace malab
