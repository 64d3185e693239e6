#include "rippler/chmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rippler/errors.hpp"

namespace rippler {

namespace {

constexpr double kRowTolerance = 1e-12;
constexpr double kRenormaliseLimit = 1e-9;

}  // namespace

void StateSpace::validate() const {
  if (num_states < 2 || num_individuals < 1 || num_timepoints < 2) {
    std::ostringstream msg;
    msg << "state space needs S >= 2, N >= 1, T >= 2 (got S=" << num_states
        << ", N=" << num_individuals << ", T=" << num_timepoints << ")";
    throw InvariantError(msg.str());
  }
}

void Snapshot::assign(std::span<const int> states, int num_states) {
  states_.assign(states.begin(), states.end());
  counts_.assign(num_states, 0);
  for (int s : states_) ++counts_[s];
}

void Snapshot::set(int j, int s) {
  --counts_[states_[j]];
  states_[j] = s;
  ++counts_[s];
}

namespace {

// Validates the rate row and returns minus the diagonal.
double checked_exit_rate(std::span<const double> rates, int from, std::span<double> out) {
  const int num_states = static_cast<int>(rates.size());
  if (from < 0 || from >= num_states || out.size() != rates.size()) {
    throw InvariantError("rates_to_probs: state index or output size out of range");
  }
  double total = 0.0;
  for (int s = 0; s < num_states; ++s) {
    if (s == from) continue;
    if (!(rates[s] >= 0.0) || !std::isfinite(rates[s])) {
      throw InvariantError("rates_to_probs: negative or non-finite off-diagonal rate");
    }
    total += rates[s];
  }
  const double diag = rates[from];
  if (std::abs(diag + total) > kRowTolerance * std::max(1.0, total)) {
    throw InvariantError("rates_to_probs: diagonal is not minus the off-diagonal sum");
  }
  return -diag;
}

void fill_row(std::span<const double> rates, int from, double exit_rate, double stay, double leave,
              std::span<double> out) {
  if (exit_rate == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    out[from] = 1.0;
    return;
  }
  const int num_states = static_cast<int>(rates.size());
  for (int s = 0; s < num_states; ++s) {
    out[s] = s == from ? stay : (rates[s] / exit_rate) * leave;
  }
  normalise_prob_row(out);
}

}  // namespace

void rates_to_probs(std::span<const double> rates, int from, std::span<double> out) {
  const double exit_rate = checked_exit_rate(rates, from, out);
  // 1 - e^{q_rr} without cancellation for small exit rates.
  fill_row(rates, from, exit_rate, std::exp(-exit_rate), -std::expm1(-exit_rate), out);
}

void rates_to_probs(std::span<const double> rates, int from, double stay, double leave, std::span<double> out) {
  const double exit_rate = checked_exit_rate(rates, from, out);
  fill_row(rates, from, exit_rate, stay, leave, out);
}

std::vector<double> rates_to_probs(std::span<const double> rates, int from) {
  std::vector<double> out(rates.size());
  rates_to_probs(rates, from, out);
  return out;
}

void normalise_prob_row(std::span<double> probs) {
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw InvariantError("probability row entry outside [0, 1]");
    }
    sum += p;
  }
  const double drift = std::abs(sum - 1.0);
  if (drift <= kRowTolerance) return;
  if (drift > kRenormaliseLimit) {
    std::ostringstream msg;
    msg << "probability row sums to " << sum;
    throw InvariantError(msg.str());
  }
  for (double& p : probs) p /= sum;
}

int last_positive(std::span<const double> probs) {
  for (int s = static_cast<int>(probs.size()) - 1; s >= 0; --s) {
    if (probs[s] > 0.0) return s;
  }
  return -1;
}

int categorical_index(double u, std::span<const double> probs) {
  const int last = last_positive(probs);
  double cum = 0.0;
  for (int s = 0; s < last; ++s) {
    cum += probs[s];
    if (u < std::min(cum, 1.0)) return s;
  }
  return last;
}

std::pair<double, double> reproducing_interval(std::span<const double> probs, int state) {
  const int last = last_positive(probs);
  if (state > last) return {1.0, 1.0};
  double cum = 0.0;
  double lower = 0.0;
  for (int s = 0; s < state; ++s) {
    cum += probs[s];
    lower = std::min(cum, 1.0);
  }
  if (state == last) return {lower, 1.0};
  cum += probs[state];
  return {lower, std::min(cum, 1.0)};
}

double open_unit(Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = 0.0;
  while (u == 0.0) u = unit(rng);
  return u;
}

double uniform_in(double lower, double upper, Rng& rng) {
  std::uniform_real_distribution<double> dist(lower, upper);
  for (;;) {
    const double u = dist(rng);
    if (u > 0.0 && u >= lower && u < upper) return u;
  }
}

HiddenStates simulate_centred(const Dynamics& dynamics, const StateSpace& space, Rng& rng) {
  space.validate();
  const int num_states = dynamics.num_states();
  HiddenStates x(space.num_timepoints, space.num_individuals);
  std::vector<double> row(num_states);
  for (int j = 0; j < space.num_individuals; ++j) {
    dynamics.initial_probs(j, row);
    std::discrete_distribution<int> draw(row.begin(), row.end());
    x(0, j) = draw(rng);
  }
  Snapshot snap;
  for (int t = 0; t + 1 < space.num_timepoints; ++t) {
    snap.assign(x.row(t), num_states);
    for (int j = 0; j < space.num_individuals; ++j) {
      dynamics.transition_probs(t, j, x(t, j), snap, row);
      std::discrete_distribution<int> draw(row.begin(), row.end());
      x(t + 1, j) = draw(rng);
    }
  }
  return x;
}

HiddenStates simulate_noncentred(const Dynamics& dynamics, const UniformGrid& u) {
  const int num_timepoints = u.num_timepoints();
  const int num_individuals = u.num_individuals();
  const int num_states = dynamics.num_states();
  HiddenStates x(num_timepoints, num_individuals);
  std::vector<double> row(num_states);
  for (int j = 0; j < num_individuals; ++j) {
    dynamics.initial_probs(j, row);
    x(0, j) = categorical_index(u(0, j), row);
  }
  Snapshot snap;
  for (int t = 0; t + 1 < num_timepoints; ++t) {
    snap.assign(x.row(t), num_states);
    for (int j = 0; j < num_individuals; ++j) {
      dynamics.transition_probs(t, j, x(t, j), snap, row);
      x(t + 1, j) = categorical_index(u(t + 1, j), row);
    }
  }
  return x;
}

UniformGrid draw_uniform_grid(int num_timepoints, int num_individuals, Rng& rng) {
  UniformGrid u(num_timepoints, num_individuals);
  for (double& v : u.values()) v = open_unit(rng);
  return u;
}

double observation_loglik_total(const Observations& y, const HiddenStates& x, const ModelSpec& model) {
  if (y.num_timepoints() != x.num_timepoints() || y.num_individuals() != x.num_individuals()) {
    throw InvariantError("observation and hidden state dimensions differ");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const auto& obs = y.values()[k];
    if (!obs) continue;
    model.emission->check(*obs);
    total += model.emission->loglik(*obs, x.values()[k]);
  }
  return total;
}

double latent_log_prior(const HiddenStates& x, const Dynamics& dynamics) {
  const int num_states = dynamics.num_states();
  std::vector<double> row(num_states);
  double total = 0.0;
  for (int j = 0; j < x.num_individuals(); ++j) {
    dynamics.initial_probs(j, row);
    total += std::log(row[x(0, j)]);
  }
  Snapshot snap;
  for (int t = 0; t + 1 < x.num_timepoints(); ++t) {
    snap.assign(x.row(t), num_states);
    for (int j = 0; j < x.num_individuals(); ++j) {
      dynamics.transition_probs(t, j, x(t, j), snap, row);
      total += std::log(row[x(t + 1, j)]);
    }
  }
  return total;
}

void check_states(const HiddenStates& x, int num_states) {
  for (int s : x.values()) {
    if (s < 0 || s >= num_states) {
      throw InvariantError("hidden state index outside the model's state space");
    }
  }
}

void check_observations(const Observations& y, const HiddenStates& x, const Emission& emission) {
  if (y.num_timepoints() != x.num_timepoints() || y.num_individuals() != x.num_individuals()) {
    throw InvariantError("observation and hidden state dimensions differ");
  }
  for (const auto& obs : y.values()) {
    if (obs) emission.check(*obs);
  }
}

}  // namespace rippler
