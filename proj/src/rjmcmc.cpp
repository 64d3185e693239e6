#include "rippler/rjmcmc.hpp"

#include <cmath>
#include <limits>

#include "rippler/errors.hpp"
#include "rippler/models.hpp"

namespace rippler {

void validate_events(const EventTimes& e, int num_timepoints) {
  auto in_range = [num_timepoints](int t) { return t >= 0 && t < num_timepoints; };
  if (e.infection && !in_range(*e.infection)) throw InvariantError("infection time out of range");
  if (e.recovery) {
    if (!e.infection) throw InvariantError("recovery without infection");
    if (!in_range(*e.recovery) || *e.recovery <= *e.infection) {
      throw InvariantError("recovery must fall after infection and inside the horizon");
    }
  }
}

std::vector<int> events_to_states(const EventTimes& e, int num_timepoints) {
  validate_events(e, num_timepoints);
  std::vector<int> states(num_timepoints, sir::kSusceptible);
  const int infected_from = e.infection.value_or(num_timepoints);
  const int recovered_from = e.recovery.value_or(num_timepoints);
  for (int t = infected_from; t < num_timepoints; ++t) {
    states[t] = t < recovered_from ? sir::kInfective : sir::kRecovered;
  }
  return states;
}

EventTimes states_to_events(std::span<const int> column) {
  EventTimes e;
  int previous = sir::kSusceptible;
  for (int t = 0; t < static_cast<int>(column.size()); ++t) {
    const int s = column[t];
    if (s < sir::kSusceptible || s > sir::kRecovered || s < previous) {
      throw InvariantError("column is not a monotone S-I-R path at t=" + std::to_string(t + 1));
    }
    if (s == sir::kInfective && previous == sir::kSusceptible) e.infection = t;
    if (s == sir::kRecovered && previous != sir::kRecovered) {
      if (previous == sir::kSusceptible) {
        throw InvariantError("direct S to R jump at t=" + std::to_string(t + 1));
      }
      e.recovery = t;
    }
    previous = s;
  }
  return e;
}

std::vector<int> column(const HiddenStates& x, int j) {
  std::vector<int> out(x.num_timepoints());
  for (int t = 0; t < x.num_timepoints(); ++t) out[t] = x(t, j);
  return out;
}

namespace {

// Size of the window an added event would be drawn from.
int add_window(const EventTimes& e, int num_timepoints) {
  if (!e.infection) return num_timepoints;
  if (!e.recovery) return num_timepoints - 1 - *e.infection;
  return 0;
}

double log_target(const HiddenStates& x, const Observations& y, const ModelSpec& model) {
  const double prior = latent_log_prior(x, *model.dynamics);
  if (prior == kLogZero) return kLogZero;
  return prior + observation_loglik_total(y, x, model);
}

}  // namespace

std::vector<RjMove> applicable_moves(const EventTimes& e, int num_timepoints) {
  std::vector<RjMove> moves;
  if (e.count() > 0) moves.push_back(RjMove::kMove);
  if (add_window(e, num_timepoints) > 0) moves.push_back(RjMove::kAdd);
  if (e.count() > 0) moves.push_back(RjMove::kRemove);
  return moves;
}

UpdateRecord RjmcmcSirKernel::update(ChainState& state, Rng& rng) {
  if (state.model.num_states() != 3) throw InvariantError("RJMCMC kernel supports the SIR model only");
  const int num_timepoints = state.x.num_timepoints();
  std::uniform_int_distribution<int> who(0, state.x.num_individuals() - 1);
  const int j = who(rng);
  const EventTimes current = states_to_events(column(state.x, j));

  UpdateRecord rec;
  const auto moves = applicable_moves(current, num_timepoints);
  if (moves.empty()) return rec;
  rec.proposed = true;
  const RjMove move = moves[std::uniform_int_distribution<std::size_t>(0, moves.size() - 1)(rng)];

  EventTimes proposed = current;
  double log_q_ratio = 0.0;  // log q(X | X*) - log q(X* | X), move-type factors aside
  auto uniform_time = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  switch (move) {
    case RjMove::kMove: {
      // Each event's window depends only on the other event, so moves are symmetric.
      const bool move_recovery = current.count() == 2 && std::bernoulli_distribution(0.5)(rng);
      if (move_recovery) {
        proposed.recovery = uniform_time(*current.infection + 1, num_timepoints - 1);
      } else {
        proposed.infection = uniform_time(0, current.recovery.value_or(num_timepoints) - 1);
      }
      break;
    }
    case RjMove::kAdd: {
      const int window = add_window(current, num_timepoints);
      if (!current.infection) {
        proposed.infection = uniform_time(0, num_timepoints - 1);
      } else {
        proposed.recovery = uniform_time(*current.infection + 1, num_timepoints - 1);
      }
      log_q_ratio = std::log(static_cast<double>(window));
      break;
    }
    case RjMove::kRemove: {
      if (proposed.recovery) {
        proposed.recovery.reset();
      } else {
        proposed.infection.reset();
      }
      log_q_ratio = -std::log(static_cast<double>(add_window(proposed, num_timepoints)));
      break;
    }
  }
  log_q_ratio += std::log(static_cast<double>(moves.size())) -
                 std::log(static_cast<double>(applicable_moves(proposed, num_timepoints).size()));

  if (!log_target_) log_target_ = log_target(state.x, state.y, state.model);
  HiddenStates x_star = state.x;
  const auto path = events_to_states(proposed, num_timepoints);
  for (int t = 0; t < num_timepoints; ++t) {
    rec.ripple_size += x_star(t, j) != path[t];
    x_star(t, j) = path[t];
  }
  const double target_star = log_target(x_star, state.y, state.model);
  double log_ratio = -std::numeric_limits<double>::infinity();
  if (target_star > kLogZero) log_ratio = target_star - *log_target_ + log_q_ratio;
  rec.log_ratio = log_ratio;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (!std::isnan(log_ratio) && (log_ratio >= 0.0 || std::log(unit(rng)) < log_ratio)) {
    rec.accepted = true;
    state.x = std::move(x_star);
    log_target_ = target_star;
  }
  return rec;
}

}  // namespace rippler
