#pragma once

// The four CLI subcommands as library calls. Each writes its files under
// config.out and returns a short human-readable report.

#include <cstdint>
#include <optional>
#include <string>

#include "rippler/config.hpp"

namespace rippler {

/// FNV-1a (64-bit) of the canonical config text, excluding the [run] section.
std::uint64_t config_hash(const RunConfig& config);

/// X.csv, Y.csv, manifest.json, config.ini.
std::string cmd_simulate(const RunConfig& config);

/// Reads Y.csv (and X.csv when present, as the truth) from `data_dir`, or
/// simulates a dataset with the simulation stream when no directory is given.
/// Writes trace.csv, state_counts.csv, intervals.csv, majd.csv,
/// acceptance_by_kappa.csv, ripple_sizes.csv, summary.json, manifest.json.
std::string cmd_infer(const RunConfig& config, const std::optional<std::string>& data_dir);

/// scaling.csv and slopes.csv.
std::string cmd_benchmark(const RunConfig& config);

struct OracleOptions {
  /// Built-in fixture (sis | sir | hmm); unset means the config's own model
  /// with a simulated dataset.
  std::optional<std::string> fixture;
  long updates = 1'000'000;
};

/// enumeration.csv and oracle.csv (kernel, updates, tv).
std::string cmd_oracle(const RunConfig& config, const OracleOptions& options);

}  // namespace rippler
