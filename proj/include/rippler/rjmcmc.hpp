#pragma once

// Reversible-jump MCMC on per-individual SIR event times.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rippler/chmm.hpp"
#include "rippler/sampler.hpp"

namespace rippler {

/// Event times of one individual, as 0-based time-point indices: the first time
/// the individual is infective and the first time it is recovered.
struct EventTimes {
  std::optional<int> infection;
  std::optional<int> recovery;

  int count() const { return infection.has_value() + recovery.has_value(); }
  bool operator==(const EventTimes&) const = default;
};

/// Throws InvariantError for a recovery without an infection, a recovery not
/// after the infection, or times outside [0, T).
void validate_events(const EventTimes& e, int num_timepoints);

std::vector<int> events_to_states(const EventTimes& e, int num_timepoints);
/// Inverse of events_to_states; throws InvariantError unless the column is a
/// monotone S -> I -> R path.
EventTimes states_to_events(std::span<const int> column);

/// Column j of X as a contiguous vector.
std::vector<int> column(const HiddenStates& x, int j);

enum class RjMove { kMove, kAdd, kRemove };

/// Move types available from `e`: move and remove need an event, add needs a
/// free event slot with a non-empty time window.
std::vector<RjMove> applicable_moves(const EventTimes& e, int num_timepoints);

class RjmcmcSirKernel final : public LatentKernel {
 public:
  std::string name() const override { return "rjmcmc-sir"; }
  UpdateRecord update(ChainState& state, Rng& rng) override;
  void invalidate() override { log_target_.reset(); }

 private:
  std::optional<double> log_target_;
};

}  // namespace rippler
