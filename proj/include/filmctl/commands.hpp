#pragma once

#include "filmctl/config.hpp"

#include <string>
#include <vector>

namespace filmctl {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitNotStabilised = 2,
  kExitSynthesisFailed = 3,
};

struct CommandResult {
  int exit_code = kExitOk;
  std::string message;             ///< one human-readable line
  std::vector<std::string> files;  ///< written, relative to the output directory
  std::string summary;             ///< JSON document also written as summary.json
};

/// Synthesis (if a strategy is set), burn-in and controlled run. Writes
/// trajectory.dat, snapshot_t<time>.dat, controller.json and summary.json.
CommandResult cmd_simulate(const Config& config, const std::string& out_dir);

/// Writes controller.json, config.ini and summary.json; with dump_matrices
/// also A, B, C, U, V and the gain matrices.
CommandResult cmd_synthesize(const Config& config, const std::string& out_dir);

/// Open-loop eigenvalues, and closed-loop ones when synthesis succeeds.
CommandResult cmd_spectrum(const Config& config, const std::string& out_dir);

/// Every (strategy, Re, M, P) point of config.sweep. Writes per strategy
/// success_<s>.dat, failure_<s>.dat, gaps_<s>.dat, plus sweep_points.dat.
CommandResult cmd_sweep(const Config& config, const std::string& out_dir);

/// Per-point seed for point `index` of a sweep.
inline std::uint64_t point_seed(std::uint64_t master, std::uint64_t index) { return master ^ index; }

}  // namespace filmctl
