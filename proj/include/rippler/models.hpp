#pragma once

// Concrete individual-based epidemic models and their observation processes.

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rippler/chmm.hpp"

namespace rippler {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// Per-individual prior over the initial state.
class InitialCondition {
 public:
  InitialCondition() = default;

  /// Every individual shares `probs`.
  static InitialCondition common(int num_individuals, std::vector<double> probs);
  /// Individual j starts in states[j] with probability one.
  static InitialCondition fixed(const std::vector<int>& states, int num_states);

  int num_individuals() const { return static_cast<int>(probs_.size()); }
  void probs(int j, std::span<double> out) const;

 private:
  std::vector<std::vector<double>> probs_;
};

// ---- SIR --------------------------------------------------------------------

namespace sir {
inline constexpr int kSusceptible = 0;
inline constexpr int kInfective = 1;
inline constexpr int kRecovered = 2;
}  // namespace sir

struct SirParams {
  double beta = 0.0;   // per infective per time unit
  double gamma = 0.0;  // recovery rate
  void validate() const;
};

/// Row `current_state` of the SIR transition matrix given the time-t snapshot.
void sir_transition_row(int t, int current_state, const Snapshot& snapshot, const SirParams& params,
                        std::span<double> out);

class SirDynamics final : public Dynamics {
 public:
  SirDynamics(SirParams params, InitialCondition initial);

  int num_states() const override { return 3; }
  std::string name() const override { return "sir"; }
  void initial_probs(int j, std::span<double> out) const override { initial_.probs(j, out); }
  void transition_probs(int t, int j, int from, const Snapshot& snap,
                        std::span<double> out) const override;

  const SirParams& params() const { return params_; }
  const InitialCondition& initial() const { return initial_; }

 private:
  SirParams params_;
  InitialCondition initial_;
  // e^{-beta k} and 1 - e^{-beta k} for k infectives, then the recovery pair.
  std::vector<double> stay_infection_;
  std::vector<double> leave_infection_;
  double stay_recovery_ = 1.0;
  double leave_recovery_ = 0.0;
};

// ---- SEIR with a chain of exposed compartments ------------------------------
//
// States: 0 = S, 1..S_E = exposed stages, S_E + 1 = I, S_E + 2 = R.

struct SeirParams {
  int exposed_steps = 1;
  double beta = 0.0;
  std::vector<double> sigmas;  // one progression rate per exposed stage
  double gamma = 0.0;

  int num_states() const { return exposed_steps + 3; }
  int infective_state() const { return exposed_steps + 1; }
  int recovered_state() const { return exposed_steps + 2; }
  void validate() const;
};

void seir_transition_row(int t, int current_state, const Snapshot& snapshot, const SeirParams& params,
                         std::span<double> out);

class SeirDynamics final : public Dynamics {
 public:
  SeirDynamics(SeirParams params, InitialCondition initial);

  int num_states() const override { return params_.num_states(); }
  std::string name() const override { return "seir"; }
  void initial_probs(int j, std::span<double> out) const override { initial_.probs(j, out); }
  void transition_probs(int t, int j, int from, const Snapshot& snap,
                        std::span<double> out) const override;

  const SeirParams& params() const { return params_; }
  const InitialCondition& initial() const { return initial_; }

 private:
  SeirParams params_;
  InitialCondition initial_;
  std::vector<double> stay_infection_;  // by number of infectives
  std::vector<double> leave_infection_;
  std::vector<double> stay_stage_;  // by state, for the constant-rate exits
  std::vector<double> leave_stage_;
};

// ---- multi-strain SIS -------------------------------------------------------
//
// States: 0 = S, i = infected with strain i (1..S_I).

struct MultiStrainParams {
  int strains = 1;
  std::vector<double> betas;
  std::vector<double> gammas;
  double delta = 0.0;  // cross-strain susceptibility factor

  int num_states() const { return strains + 1; }
  void validate() const;
};

void multistrain_transition_row(int t, int current_state, const Snapshot& snapshot,
                                const MultiStrainParams& params, std::span<double> out);

class MultiStrainDynamics final : public Dynamics {
 public:
  MultiStrainDynamics(MultiStrainParams params, InitialCondition initial);

  int num_states() const override { return params_.num_states(); }
  std::string name() const override { return "multistrain"; }
  void initial_probs(int j, std::span<double> out) const override { initial_.probs(j, out); }
  void transition_probs(int t, int j, int from, const Snapshot& snap,
                        std::span<double> out) const override;

  const MultiStrainParams& params() const { return params_; }
  const InitialCondition& initial() const { return initial_; }

 private:
  MultiStrainParams params_;
  InitialCondition initial_;
  // Per strain i and count k: e^{-beta_i k} and e^{-delta beta_i k}; e^{-gamma_i}.
  std::vector<std::vector<double>> infection_factor_;
  std::vector<std::vector<double>> cross_factor_;
  std::vector<double> recovery_factor_;
};

// ---- observation models -----------------------------------------------------

/// Imperfect diagnostic test. y = 1 positive, y = 0 negative.
class DiagnosticTest final : public Emission {
 public:
  DiagnosticTest(double sensitivity, double specificity, std::vector<int> target_states,
                 int num_states, double test_probability = 0.0);

  double loglik(int y, int state) const override;
  void check(int y) const override;

  double sensitivity() const { return sensitivity_; }
  double specificity() const { return specificity_; }
  double test_probability() const { return test_probability_; }
  bool is_target(int state) const { return target_[state]; }

 private:
  double sensitivity_;
  double specificity_;
  double test_probability_;
  std::vector<bool> target_;
};

/// log f(y | s) for a diagnostic test; 0 for a missing result.
double test_loglik(const Observation& y, int state, const DiagnosticTest& model);

/// Encoding of known recovery times as per-cell observations.
enum class RecoveryCode : int {
  kSusceptibleOrInfective = 0,
  kInfective = 1,
  kRecovered = 2,
};

/// Indicator likelihood for recovery-time observations: log 1 when the state is
/// compatible with the code, kLogZero otherwise.
class RecoveryObservation final : public Emission {
 public:
  RecoveryObservation(int susceptible_state, int infective_state, int recovered_state);

  double loglik(int y, int state) const override;
  void check(int y) const override;

 private:
  int susceptible_;
  int infective_;
  int recovered_;
};

double recovery_loglik(const Observation& y, int state, const RecoveryObservation& model);

// ---- dataset simulation -----------------------------------------------------

struct Dataset {
  HiddenStates x;
  Observations y;
};

/// Forward-simulates X, then tests each cell independently with the model's
/// test probability.
Dataset simulate_dataset(const Dynamics& dynamics, const StateSpace& space, const DiagnosticTest& test,
                         Rng& rng);

/// Forward-simulates X and encodes each individual's realised recovery time.
/// Individuals without a recovery are coded susceptible-or-infective throughout.
Dataset simulate_recovery_dataset(const Dynamics& dynamics, const StateSpace& space, int infective_state,
                                  int recovered_state, Rng& rng);

/// The recovery-time encoding of an existing hidden state matrix.
Observations encode_recovery_times(const HiddenStates& x, int infective_state, int recovered_state);

}  // namespace rippler
