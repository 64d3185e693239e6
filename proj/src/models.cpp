#include "rippler/models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rippler/errors.hpp"

namespace rippler {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw InvariantError(what);
}

bool positive_finite(double v) { return v > 0.0 && std::isfinite(v); }

// Zeroed per-thread buffer for building rate rows.
std::vector<double>& rate_scratch(int num_states) {
  thread_local std::vector<double> rates;
  rates.assign(num_states, 0.0);
  return rates;
}

// Single-exit row: stay with e^{-rate}, move to `to` otherwise.
void single_exit_row(int from, int to, double rate, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  const double stay = std::exp(-rate);
  out[from] = stay;
  out[to] += -std::expm1(-rate);
}

// e^{-rate k} for k = 0..max_count.
std::vector<double> exp_table(double rate, int max_count) {
  std::vector<double> table(max_count + 1);
  for (int k = 0; k <= max_count; ++k) table[k] = std::exp(-rate * k);
  return table;
}

std::vector<double> expm1_table(double rate, int max_count) {
  std::vector<double> table(max_count + 1);
  for (int k = 0; k <= max_count; ++k) table[k] = -std::expm1(-rate * k);
  return table;
}

void cached_exit_row(int from, int to, double stay, double leave, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  out[from] = stay;
  out[to] += leave;
}

}  // namespace

// ---- InitialCondition -------------------------------------------------------

InitialCondition InitialCondition::common(int num_individuals, std::vector<double> probs) {
  normalise_prob_row(probs);
  InitialCondition init;
  init.probs_.assign(num_individuals, probs);
  return init;
}

InitialCondition InitialCondition::fixed(const std::vector<int>& states, int num_states) {
  InitialCondition init;
  init.probs_.reserve(states.size());
  for (int s : states) {
    require(s >= 0 && s < num_states, "initial state outside the state space");
    std::vector<double> row(num_states, 0.0);
    row[s] = 1.0;
    init.probs_.push_back(std::move(row));
  }
  return init;
}

void InitialCondition::probs(int j, std::span<double> out) const {
  const auto& row = probs_[j];
  std::copy(row.begin(), row.end(), out.begin());
}

// ---- SIR --------------------------------------------------------------------

void SirParams::validate() const {
  require(positive_finite(beta), "SIR: beta must be positive");
  require(positive_finite(gamma), "SIR: gamma must be positive");
}

void sir_transition_row(int /*t*/, int current_state, const Snapshot& snapshot, const SirParams& params,
                        std::span<double> out) {
  using namespace sir;
  switch (current_state) {
    case kSusceptible:
      single_exit_row(kSusceptible, kInfective, params.beta * snapshot.count(kInfective), out);
      break;
    case kInfective:
      single_exit_row(kInfective, kRecovered, params.gamma, out);
      break;
    default:
      std::fill(out.begin(), out.end(), 0.0);
      out[kRecovered] = 1.0;
  }
}

SirDynamics::SirDynamics(SirParams params, InitialCondition initial)
    : params_(params), initial_(std::move(initial)) {
  params_.validate();
  const int n = initial_.num_individuals();
  stay_infection_ = exp_table(params_.beta, n);
  leave_infection_ = expm1_table(params_.beta, n);
  stay_recovery_ = std::exp(-params_.gamma);
  leave_recovery_ = -std::expm1(-params_.gamma);
}

void SirDynamics::transition_probs(int t, int /*j*/, int from, const Snapshot& snap,
                                   std::span<double> out) const {
  using namespace sir;
  const int infectives = snap.count(kInfective);
  if (from == kSusceptible && infectives < static_cast<int>(stay_infection_.size())) {
    cached_exit_row(kSusceptible, kInfective, stay_infection_[infectives], leave_infection_[infectives], out);
  } else if (from == kInfective) {
    cached_exit_row(kInfective, kRecovered, stay_recovery_, leave_recovery_, out);
  } else {
    sir_transition_row(t, from, snap, params_, out);
  }
}

// ---- SEIR -------------------------------------------------------------------

void SeirParams::validate() const {
  require(exposed_steps >= 1, "SEIR: need at least one exposed stage");
  require(static_cast<int>(sigmas.size()) == exposed_steps, "SEIR: one sigma per exposed stage");
  require(positive_finite(beta) && positive_finite(gamma), "SEIR: rates must be positive");
  for (double s : sigmas) require(positive_finite(s), "SEIR: rates must be positive");
}

void seir_transition_row(int /*t*/, int current_state, const Snapshot& snapshot, const SeirParams& params,
                         std::span<double> out) {
  const int num_states = params.num_states();
  const int infective = params.infective_state();
  // Full rate row routed through the general conversion; each state has at most one exit.
  std::vector<double>& row = rate_scratch(num_states);
  double exit_rate = 0.0;
  if (current_state == 0) {
    exit_rate = params.beta * snapshot.count(infective);
  } else if (current_state <= params.exposed_steps) {
    exit_rate = params.sigmas[current_state - 1];
  } else if (current_state == infective) {
    exit_rate = params.gamma;
  }
  if (current_state + 1 < num_states) row[current_state + 1] = exit_rate;
  row[current_state] = -exit_rate;
  rates_to_probs(row, current_state, out);
}

SeirDynamics::SeirDynamics(SeirParams params, InitialCondition initial)
    : params_(std::move(params)), initial_(std::move(initial)) {
  params_.validate();
  const int n = initial_.num_individuals();
  stay_infection_ = exp_table(params_.beta, n);
  leave_infection_ = expm1_table(params_.beta, n);
  const int num_states = params_.num_states();
  stay_stage_.assign(num_states, 1.0);
  leave_stage_.assign(num_states, 0.0);
  for (int s = 1; s < params_.recovered_state(); ++s) {
    const double rate = s == params_.infective_state() ? params_.gamma : params_.sigmas[s - 1];
    stay_stage_[s] = std::exp(-rate);
    leave_stage_[s] = -std::expm1(-rate);
  }
}

void SeirDynamics::transition_probs(int t, int /*j*/, int from, const Snapshot& snap,
                                    std::span<double> out) const {
  const int num_states = params_.num_states();
  const int infectives = snap.count(params_.infective_state());
  if (from == 0 && infectives >= static_cast<int>(stay_infection_.size())) {
    seir_transition_row(t, from, snap, params_, out);
    return;
  }
  // The rate row is built in `out` and converted in place.
  std::span<double> rates = out;
  std::fill(rates.begin(), rates.end(), 0.0);
  double exit_rate = 0.0;
  double stay = 1.0;
  double leave = 0.0;
  if (from == 0) {
    exit_rate = params_.beta * infectives;
    stay = stay_infection_[infectives];
    leave = leave_infection_[infectives];
  } else if (from < params_.recovered_state()) {
    exit_rate = from == params_.infective_state() ? params_.gamma : params_.sigmas[from - 1];
    stay = stay_stage_[from];
    leave = leave_stage_[from];
  }
  if (from + 1 < num_states) rates[from + 1] = exit_rate;
  rates[from] = -exit_rate;
  rates_to_probs(rates, from, stay, leave, out);
}

// ---- multi-strain -----------------------------------------------------------

void MultiStrainParams::validate() const {
  require(strains >= 1, "multi-strain: need at least one strain");
  require(static_cast<int>(betas.size()) == strains && static_cast<int>(gammas.size()) == strains,
          "multi-strain: one beta and one gamma per strain");
  for (int i = 0; i < strains; ++i) {
    require(positive_finite(betas[i]) && positive_finite(gammas[i]), "multi-strain: rates must be positive");
  }
  require(delta >= 0.0 && delta <= 1.0, "multi-strain: delta must lie in [0, 1]");
}

void multistrain_transition_row(int /*t*/, int current_state, const Snapshot& snapshot,
                                const MultiStrainParams& params, std::span<double> out) {
  const int num_states = params.num_states();
  std::vector<double>& rates = rate_scratch(num_states);
  double exit_rate = 0.0;
  if (current_state == 0) {
    for (int i = 1; i < num_states; ++i) {
      rates[i] = params.betas[i - 1] * snapshot.count(i);
      exit_rate += rates[i];
    }
  } else {
    rates[0] = params.gammas[current_state - 1];
    exit_rate = rates[0];
    for (int k = 1; k < num_states; ++k) {
      if (k == current_state) continue;
      rates[k] = params.delta * params.betas[k - 1] * snapshot.count(k);
      exit_rate += rates[k];
    }
  }
  rates[current_state] = -exit_rate;
  rates_to_probs(rates, current_state, out);
}

MultiStrainDynamics::MultiStrainDynamics(MultiStrainParams params, InitialCondition initial)
    : params_(std::move(params)), initial_(std::move(initial)) {
  params_.validate();
  const int n = initial_.num_individuals();
  for (int i = 0; i < params_.strains; ++i) {
    infection_factor_.push_back(exp_table(params_.betas[i], n));
    cross_factor_.push_back(exp_table(params_.delta * params_.betas[i], n));
    recovery_factor_.push_back(std::exp(-params_.gammas[i]));
  }
}

void MultiStrainDynamics::transition_probs(int t, int /*j*/, int from, const Snapshot& snap,
                                           std::span<double> out) const {
  const int num_states = params_.num_states();
  const int max_count = static_cast<int>(recovery_factor_.empty() ? 0 : infection_factor_[0].size()) - 1;
  std::span<double> rates = out;
  std::fill(rates.begin(), rates.end(), 0.0);
  double exit_rate = 0.0;
  double stay = 1.0;
  for (int i = 1; i < num_states; ++i) {
    const int count = snap.count(i);
    if (count > max_count) {
      multistrain_transition_row(t, from, snap, params_, out);
      return;
    }
    if (i == from) continue;
    const double base = params_.betas[i - 1] * count;
    rates[i] = from == 0 ? base : params_.delta * base;
    exit_rate += rates[i];
    stay *= from == 0 ? infection_factor_[i - 1][count] : cross_factor_[i - 1][count];
  }
  if (from != 0) {
    rates[0] = params_.gammas[from - 1];
    exit_rate += rates[0];
    stay *= recovery_factor_[from - 1];
  }
  rates[from] = -exit_rate;
  rates_to_probs(rates, from, stay, 1.0 - stay, out);
}

// ---- diagnostic test --------------------------------------------------------

DiagnosticTest::DiagnosticTest(double sensitivity, double specificity, std::vector<int> target_states,
                               int num_states, double test_probability)
    : sensitivity_(sensitivity),
      specificity_(specificity),
      test_probability_(test_probability),
      target_(num_states, false) {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  require(unit(sensitivity) && unit(specificity) && unit(test_probability),
          "diagnostic test: sensitivity, specificity and test probability must lie in [0, 1]");
  require(!target_states.empty(), "diagnostic test: target states must be non-empty");
  for (int s : target_states) {
    require(s >= 0 && s < num_states, "diagnostic test: target state outside the state space");
    target_[s] = true;
  }
}

double DiagnosticTest::loglik(int y, int state) const {
  const bool target = target_[state];
  if (y == 1) return std::log(target ? sensitivity_ : 1.0 - specificity_);
  return std::log(target ? 1.0 - sensitivity_ : specificity_);
}

void DiagnosticTest::check(int y) const {
  if (y != 0 && y != 1) {
    std::ostringstream msg;
    msg << "test result " << y << " is not 0 or 1";
    throw DomainError(msg.str());
  }
}

double test_loglik(const Observation& y, int state, const DiagnosticTest& model) {
  if (!y) return 0.0;
  model.check(*y);
  return model.loglik(*y, state);
}

// ---- recovery times ---------------------------------------------------------

RecoveryObservation::RecoveryObservation(int susceptible_state, int infective_state, int recovered_state)
    : susceptible_(susceptible_state), infective_(infective_state), recovered_(recovered_state) {}

double RecoveryObservation::loglik(int y, int state) const {
  switch (static_cast<RecoveryCode>(y)) {
    case RecoveryCode::kRecovered:
      return state == recovered_ ? 0.0 : kLogZero;
    case RecoveryCode::kInfective:
      return state == infective_ ? 0.0 : kLogZero;
    case RecoveryCode::kSusceptibleOrInfective:
      return state == susceptible_ || state == infective_ ? 0.0 : kLogZero;
  }
  return kLogZero;
}

void RecoveryObservation::check(int y) const {
  if (y < 0 || y > 2) {
    std::ostringstream msg;
    msg << "recovery observation code " << y << " is not one of 0 (S/I), 1 (I), 2 (R)";
    throw DomainError(msg.str());
  }
}

double recovery_loglik(const Observation& y, int state, const RecoveryObservation& model) {
  if (!y) return 0.0;
  model.check(*y);
  return model.loglik(*y, state);
}

// ---- datasets ---------------------------------------------------------------

Dataset simulate_dataset(const Dynamics& dynamics, const StateSpace& space, const DiagnosticTest& test,
                         Rng& rng) {
  Dataset data{simulate_centred(dynamics, space, rng), Observations(space.num_timepoints, space.num_individuals)};
  std::bernoulli_distribution tested(test.test_probability());
  std::bernoulli_distribution positive_if_target(test.sensitivity());
  std::bernoulli_distribution positive_otherwise(1.0 - test.specificity());
  for (int t = 0; t < space.num_timepoints; ++t) {
    for (int j = 0; j < space.num_individuals; ++j) {
      if (!tested(rng)) continue;
      const bool positive =
          test.is_target(data.x(t, j)) ? positive_if_target(rng) : positive_otherwise(rng);
      data.y(t, j) = positive ? 1 : 0;
    }
  }
  return data;
}

Observations encode_recovery_times(const HiddenStates& x, int infective_state, int recovered_state) {
  const int num_timepoints = x.num_timepoints();
  Observations y(num_timepoints, x.num_individuals());
  for (int j = 0; j < x.num_individuals(); ++j) {
    int recovery = num_timepoints;
    for (int t = 0; t < num_timepoints; ++t) {
      if (x(t, j) == recovered_state) {
        recovery = t;
        break;
      }
    }
    for (int t = 0; t < num_timepoints; ++t) {
      RecoveryCode code = RecoveryCode::kSusceptibleOrInfective;
      if (t >= recovery) {
        code = RecoveryCode::kRecovered;
      } else if (t == recovery - 1 && x(t, j) == infective_state) {
        code = RecoveryCode::kInfective;
      }
      y(t, j) = static_cast<int>(code);
    }
  }
  return y;
}

Dataset simulate_recovery_dataset(const Dynamics& dynamics, const StateSpace& space, int infective_state,
                                  int recovered_state, Rng& rng) {
  Dataset data{simulate_centred(dynamics, space, rng), {}};
  data.y = encode_recovery_times(data.x, infective_state, recovered_state);
  return data;
}

}  // namespace rippler
