#pragma once

#include "filmctl/sim.hpp"
#include "filmctl/synth.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace filmctl {

/// Grid of (Re, M, P) points, each run with the base RunConfig otherwise.
struct SweepSpec {
  std::vector<double> reynolds;  ///< default: 12 log-spaced points on [1, 100]
  std::vector<int> m_list{3, 5, 7, 9, 11};
  std::vector<int> p_list{3, 5, 7, 9, 11};
  std::vector<Strategy> strategies{Strategy::OutputFeedback};
  int workers = 0;  ///< 0: hardware concurrency

  SweepSpec();
  void validate() const;
};

std::vector<double> log_spaced(double lo, double hi, int count);

/// Everything a command needs. Text form: sectioned "key = value" lines,
/// '#' or ';' comments.
///
///   [physics]      reynolds (required), capillary, theta, length, beta
///   [grid]         nodes, dealias
///   [control]      strategy, actuators, observers, omega, retain, observer_weight
///   [synthesis]    sof_tolerance, sof_max_iterations
///   [run]          burn_in_time, control_time, epsilon, h_min, h_max,
///                  sample_interval, snapshot_times, seed, rotate_nodes
///   [perturbation] modes, amplitude, noise
///   [integrator]   rtol, atol, dt_init, dt_min, dt_max
///   [sweep]        reynolds, m_list, p_list, strategies, workers
///   [output]       dir, dump_matrices
struct Config {
  RunConfig run;
  SweepSpec sweep;
  std::uint64_t seed = 0;
  std::string out_dir;
  bool dump_matrices = false;

  /// RunConfig with the seed applied.
  RunConfig run_config() const;
};

/// (key, value) applied after the file; key as for apply_override.
using Override = std::pair<std::string, std::string>;

/// Throws ConfigError carrying the 1-based line of the offending entry.
/// Required keys may be supplied by `overrides` instead of the text.
Config parse_config(const std::string& text, const std::vector<Override>& overrides = {});
Config load_config(const std::string& path, const std::vector<Override>& overrides = {});

/// Set one entry. `key` is "section.key" or one of the short aliases
/// re, m, p, seed, strategy, out_dir, workers, snapshot_times.
void apply_override(Config& config, const std::string& key, const std::string& value);

/// Fully resolved configuration in the text format, keys sorted; parsing it
/// back yields the same Config.
std::string to_text(const Config& config);

/// 16 hex digits of FNV-1a over to_text.
std::string config_hash(const Config& config);

}  // namespace filmctl
