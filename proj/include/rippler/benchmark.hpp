#pragma once

// Per-update cost and mixing of each kernel as the number of states grows.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rippler/config.hpp"
#include "rippler/sampler.hpp"

namespace rippler {

/// Kernel by its config name; throws ConfigError for unknown names.
std::unique_ptr<LatentKernel> make_kernel(const std::string& name, const SamplerConfig& sampler,
                                          std::optional<std::uint64_t> tuner_seed = std::nullopt);

bool kernel_is_data_informed(const std::string& name);

struct ScalingRow {
  std::string kernel;
  int num_states = 0;
  double majd = 0.0;  // ordered for seir/sir, indicator for multistrain
  double seconds = 0.0;
  long updates = 0;
  double relative_time = 0.0;       // per-update time over the same kernel's smallest S
  double majd_per_relative_time = 0.0;
};

/// For each S in config.benchmark.num_states: simulate a dataset with the
/// simulation seed, then run every kernel for K x K' updates from a common
/// initial state. Only the latent update loops are timed.
std::vector<ScalingRow> scaling_benchmark(const RunConfig& config);

struct OracleRow {
  std::string kernel;
  long updates = 0;
  double tv = 0.0;
};

/// Kernels compared against the enumeration: both Rippler variants (adaptive),
/// Rippler with kappa fixed at 1 ("rippler-k1"), iFFBS, and RJMCMC when the
/// model is SIR.
std::vector<std::string> oracle_kernels(bool sir_model);

/// Runs `updates` latent updates of one kernel and histograms every visited
/// configuration (one count per update).
std::vector<std::uint64_t> visit_histogram(const ChainState& start, LatentKernel& kernel, const StateSpace& space,
                                           long updates, Rng& rng);

/// TV distance between each kernel's visit histogram and the exact posterior.
/// Each kernel gets its own inference and tuner streams derived from `seed`.
std::vector<OracleRow> run_oracle(const ModelSpec& model, const Observations& y, const StateSpace& space,
                                  std::span<const double> exact, std::span<const std::string> kernels,
                                  const SamplerConfig& sampler, long updates, std::uint64_t seed);

/// Least-squares slope of log(y) on log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace rippler
