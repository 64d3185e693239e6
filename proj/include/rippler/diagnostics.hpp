#pragma once

// Mixing metrics, posterior summaries and the exact-enumeration oracle.

#include <cstdint>
#include <span>
#include <vector>

#include "rippler/chmm.hpp"

namespace rippler {

// ---- mean absolute jump distance ---------------------------------------------

/// (1/K) sum_k sum_{t,j} |x^(k) - x^(k-1)| over K+1 consecutive samples.
double majd_ordered(std::span<const HiddenStates> trace);
/// Same with the indicator distance 1{x^(k) != x^(k-1)}, for unordered states.
double majd_indicator(std::span<const HiddenStates> trace);

/// Streaming form of both MAJD variants; feed X^(0), X^(1), ...
class MajdAccumulator {
 public:
  void add(const HiddenStates& x);

  int jumps() const { return jumps_; }
  double ordered() const { return jumps_ == 0 ? 0.0 : ordered_sum_ / jumps_; }
  double indicator() const { return jumps_ == 0 ? 0.0 : indicator_sum_ / jumps_; }

 private:
  HiddenStates previous_;
  bool has_previous_ = false;
  int jumps_ = 0;
  double ordered_sum_ = 0.0;
  double indicator_sum_ = 0.0;
};

// ---- state counts and credible intervals -------------------------------------

/// Per-iteration T x S counts of individuals in each state.
class StateCountSeries {
 public:
  StateCountSeries() = default;
  StateCountSeries(int num_timepoints, int num_states) : timepoints_(num_timepoints), states_(num_states) {}

  void add(const HiddenStates& x);

  int iterations() const { return iterations_; }
  int num_timepoints() const { return timepoints_; }
  int num_states() const { return states_; }
  int count(int iteration, int t, int s) const {
    return counts_[(static_cast<std::size_t>(iteration) * timepoints_ + t) * states_ + s];
  }

 private:
  int timepoints_ = 0;
  int states_ = 0;
  int iterations_ = 0;
  std::vector<int> counts_;
};

/// T x S counts of a single matrix.
std::vector<int> state_counts(const HiddenStates& x, int num_states);

struct IntervalSummary {
  int t = 0;
  int state = 0;
  double median = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Empirical central interval at `level` (type-7 quantiles) for every (t, state),
/// after discarding the first `burn_in` fraction of iterations.
std::vector<IntervalSummary> credible_intervals(const StateCountSeries& series, double level,
                                                double burn_in = 0.1);

/// Fraction of (t, state) pairs whose true count lies inside its interval.
double interval_coverage(std::span<const IntervalSummary> intervals, const HiddenStates& truth,
                         int num_states);

// ---- exact enumeration -------------------------------------------------------

inline constexpr std::uint64_t kMaxEnumeration = 1'000'000;

/// Exact pi(X | theta, Y) over every configuration; configuration ids are the
/// base-S digits of X in time-major cell order (cell 0 least significant).
struct EnumeratedPosterior {
  int num_states = 0;
  int num_timepoints = 0;
  int num_individuals = 0;
  std::vector<double> probability;
};

EnumeratedPosterior enumerate_posterior(const ModelSpec& model, const Observations& y,
                                        const StateSpace& space);

std::uint64_t configuration_id(const HiddenStates& x, int num_states);
HiddenStates configuration_from_id(std::uint64_t id, const StateSpace& space);

/// Total-variation distance between an empirical histogram and the exact posterior.
double total_variation(std::span<const double> exact, std::span<const std::uint64_t> counts);

}  // namespace rippler
