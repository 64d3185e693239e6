#pragma once

// Coupled hidden Markov model core: data model, rate -> probability conversion,
// the non-centred categorical map and forward simulation.
//
// States are 0-based internally. Files and the CLI use 1-based states.

#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rippler/grid.hpp"

namespace rippler {

using Rng = std::mt19937_64;
using Observation = std::optional<int>;
using HiddenStates = Grid<int>;
using Observations = Grid<Observation>;
using UniformGrid = Grid<double>;

struct StateSpace {
  int num_states = 0;
  int num_individuals = 0;
  int num_timepoints = 0;

  /// Throws InvariantError unless S >= 2, N >= 1, T >= 2.
  void validate() const;
};

/// States of every individual at one time-point plus per-state counts.
class Snapshot {
 public:
  Snapshot() = default;
  Snapshot(std::span<const int> states, int num_states) { assign(states, num_states); }

  void assign(std::span<const int> states, int num_states);
  /// Moves individual j to state s, keeping the counts in sync.
  void set(int j, int s);

  std::span<const int> states() const { return states_; }
  int state(int j) const { return states_[j]; }
  int count(int s) const { return counts_[s]; }
  int size() const { return static_cast<int>(states_.size()); }

 private:
  std::vector<int> states_;
  std::vector<int> counts_;
};

/// Latent transmission dynamics: initial distribution and transition rows.
class Dynamics {
 public:
  virtual ~Dynamics() = default;

  virtual int num_states() const = 0;
  virtual std::string name() const = 0;

  /// Prior over x_{0,j}; writes S probabilities.
  virtual void initial_probs(int j, std::span<double> out) const = 0;

  /// Row `from` of the transition matrix governing x_{t,j} -> x_{t+1,j}.
  /// Must depend on the population only through `snap` (the states at t).
  virtual void transition_probs(int t, int j, int from, const Snapshot& snap,
                                std::span<double> out) const = 0;
};

/// Observation model f(y | x). Missing observations never reach it.
class Emission {
 public:
  virtual ~Emission() = default;

  /// log f(y | state). May be -infinity for impossible pairs.
  virtual double loglik(int y, int state) const = 0;
  /// Throws DomainError when y is not a value this model can produce.
  virtual void check(int y) const = 0;
};

struct ModelSpec {
  std::shared_ptr<const Dynamics> dynamics;
  std::shared_ptr<const Emission> emission;

  int num_states() const { return dynamics->num_states(); }

  double obs_loglik(const Observation& y, int state) const {
    return y ? emission->loglik(*y, state) : 0.0;
  }
};

// ---- probability rows -------------------------------------------------------

/// Converts row `from` of a rate matrix into transition probabilities over one
/// time unit without a matrix exponential. `rates` is the full rate row with the
/// diagonal equal to minus the off-diagonal sum; it may alias `out`.
void rates_to_probs(std::span<const double> rates, int from, std::span<double> out);
std::vector<double> rates_to_probs(std::span<const double> rates, int from);
/// Same conversion with e^{q_rr} and 1 - e^{q_rr} supplied by the caller, for
/// models that cache their exponentials.
void rates_to_probs(std::span<const double> rates, int from, double stay, double leave, std::span<double> out);

/// Checks entries are in [0,1] and the row sums to one. Drift in (1e-12, 1e-9]
/// is renormalised in place; anything larger throws InvariantError.
void normalise_prob_row(std::span<double> probs);

/// Index of the last state with positive probability; -1 for an all-zero row.
int last_positive(std::span<const double> probs);

/// Generalised inverse CDF with half-open cells [cum_{s-1}, cum_s). The cell of
/// the last positive-probability state always ends at exactly 1.
int categorical_index(double u, std::span<const double> probs);

/// The interval [lower, upper) of u values that categorical_index maps to `state`.
/// Uses the same cumulative sums as categorical_index, bit for bit.
std::pair<double, double> reproducing_interval(std::span<const double> probs, int state);

// ---- random helpers ---------------------------------------------------------

/// Uniform draw from the open interval (0, 1).
double open_unit(Rng& rng);
/// Uniform draw from [lower, upper) that is also strictly positive. Requires lower < upper.
double uniform_in(double lower, double upper, Rng& rng);

// ---- simulation -------------------------------------------------------------

/// Centred forward simulation: categorical draws time-point by time-point.
HiddenStates simulate_centred(const Dynamics& dynamics, const StateSpace& space, Rng& rng);

/// Non-centred forward simulation: a pure function of the dynamics and `u`.
HiddenStates simulate_noncentred(const Dynamics& dynamics, const UniformGrid& u);

/// Fresh grid of independent Uniform(0,1) draws.
UniformGrid draw_uniform_grid(int num_timepoints, int num_individuals, Rng& rng);

// ---- densities --------------------------------------------------------------

/// Sum of log f(y_{t,j} | x_{t,j}) over observed cells.
double observation_loglik_total(const Observations& y, const HiddenStates& x, const ModelSpec& model);

/// log pi(X | theta): initial probabilities times realised transition probabilities.
double latent_log_prior(const HiddenStates& x, const Dynamics& dynamics);

/// Validates dimensions and every state index against the model.
void check_states(const HiddenStates& x, int num_states);
void check_observations(const Observations& y, const HiddenStates& x, const Emission& emission);

}  // namespace rippler
