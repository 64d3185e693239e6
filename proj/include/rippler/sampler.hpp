#pragma once

// Metropolis-within-Gibbs driver shared by every latent-state kernel.

#include <functional>
#include <string>
#include <vector>

#include "rippler/chmm.hpp"
#include "rippler/diagnostics.hpp"

namespace rippler {

struct ChainState {
  ModelSpec model;
  Observations y;
  HiddenStates x;
};

/// Outcome of one latent update.
struct UpdateRecord {
  int kappa = 0;             // cells changed in U; 0 when the kernel has no such notion
  bool proposed = false;     // false when no move was possible
  bool accepted = false;
  bool exploit = false;      // kappa came from the tuner's exploitation branch
  bool earliest_flipped = true;
  int ripple_size = 0;       // cells where X* differs from X
  double log_ratio = 0.0;
};

class LatentKernel {
 public:
  virtual ~LatentKernel() = default;

  virtual std::string name() const = 0;
  virtual UpdateRecord update(ChainState& state, Rng& rng) = 0;
  /// Drops anything cached from the current parameters.
  virtual void invalidate() {}
};

/// theta ~ pi(theta | X, Y). Returns true when the parameters changed.
using ParameterUpdate = std::function<bool(ChainState&, Rng&)>;

struct ChainOptions {
  int iterations = 0;             // K
  int updates_per_iteration = 1;  // K'
  bool keep_records = true;
  bool keep_counts = true;
  /// Called with X^(k) after every iteration, including k = 0.
  std::function<void(int, const ChainState&)> observer;
};

struct ChainResult {
  std::vector<UpdateRecord> records;
  StateCountSeries counts;
  MajdAccumulator majd;
  double update_seconds = 0.0;  // CPU time spent inside latent updates only
  long updates = 0;
};

/// CPU time consumed by the calling thread.
double thread_cpu_seconds();

/// Runs K iterations of: parameter update, then K' latent updates.
ChainResult run_chain(ChainState& state, LatentKernel& kernel, const ChainOptions& options, Rng& rng,
                      const ParameterUpdate& parameter_update = {});

/// Initial latent state: forward simulation from the prior (optionally weighted by
/// the data, see rippler.hpp), retried until the observations have positive likelihood.
HiddenStates initial_latent_state(const ModelSpec& model, const Observations& y, bool data_informed, Rng& rng,
                                  int max_attempts = 10'000);

}  // namespace rippler
