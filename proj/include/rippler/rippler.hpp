#pragma once

// Rippler latent-state updates: standard and data-informed.
//
// The current X is re-expressed as a grid of uniforms U that reproduces it under
// the non-centred map, a few cells of U are moved outside their reproducing
// intervals, and the map is re-run forward so the change propagates ("ripples")
// through later time-points. The data-informed variant runs the same map with
// transition probabilities reweighted by the observation likelihood.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rippler/chmm.hpp"
#include "rippler/sampler.hpp"

namespace rippler {

/// f(y_{t,j} | s) for every cell and state, cached once per (model, Y).
class ObservationWeights {
 public:
  ObservationWeights(const ModelSpec& model, const Observations& y);

  int num_states() const { return num_states_; }
  bool observed(int t, int j) const { return observed_(t, j) != 0; }
  std::span<const double> likelihoods(int t, int j) const {
    return {f_.data() + (static_cast<std::size_t>(t) * cols_ + j) * num_states_,
            static_cast<std::size_t>(num_states_)};
  }

 private:
  int num_states_;
  int cols_;
  Grid<char> observed_;
  std::vector<double> f_;
};

/// Reweights a probability row by f(y | s) in place (rho = p f / c) and returns
/// log c. Returns -infinity, leaving the row untouched, when c = 0.
double modify_row(std::span<double> probs, std::span<const double> likelihoods);

/// Reproducing intervals [lower, upper) for every cell of X plus the log of the
/// data-informed normaliser of each cell's governing row (0 for the standard map).
struct BoundsGrids {
  UniformGrid lower;
  UniformGrid upper;
  Grid<double> log_normaliser;
  std::vector<double> cumulative_weight;  // running sum of weights in cell order
  double total_weight = 0.0;
  int positive_cells = 0;

  /// Length of the complement region: the cell's selection weight.
  double weight(Cell c) const { return 1.0 - upper[c] + lower[c]; }
  /// Sum of log c over cells t >= 1 (the initial-state constants cancel in ratios).
  double transition_log_normaliser() const;
};

/// Bounds of X under p (weights == nullptr) or under rho. Throws InfeasibleError
/// naming the cell when a realised transition has zero probability or c = 0.
BoundsGrids compute_bounds(const HiddenStates& x, const ModelSpec& model, const ObservationWeights* weights);
BoundsGrids compute_bounds(const HiddenStates& x, const ModelSpec& model, bool data_informed,
                           const Observations* y);

/// u_{t,j} ~ Uniform[lower, upper) independently.
UniformGrid materialise_u(const BoundsGrids& bounds, Rng& rng);
/// Same draws for time-points from `start_time` on only, written into `u`.
void materialise_u(const BoundsGrids& bounds, Rng& rng, int start_time, UniformGrid& u);

/// `kappa` distinct cells drawn sequentially without replacement, each pick with
/// probability proportional to its weight among the remaining cells. Returns
/// fewer cells when fewer have positive weight. Order of the picks is kept.
std::vector<Cell> select_cells(const BoundsGrids& bounds, int kappa, Rng& rng);

/// Copies `u`, replacing each selected cell by a uniform draw from
/// (0, lower) U [upper, 1).
UniformGrid propose_u_star(const UniformGrid& u, std::span<const Cell> cells, const BoundsGrids& bounds, Rng& rng);

struct Reconstruction {
  HiddenStates x;
  BoundsGrids bounds;  // bounds of the reconstructed X, under the same map
  bool feasible = true;
  std::optional<Cell> infeasible_cell;
};

/// Deterministic forward map U* -> X*. With a prefix, time-points before
/// `start_time` are copied from it instead of being recomputed.
struct ReconstructPrefix {
  const HiddenStates* x = nullptr;
  const BoundsGrids* bounds = nullptr;
  int start_time = 0;
};
Reconstruction reconstruct(const UniformGrid& u_star, const ModelSpec& model, const ObservationWeights* weights,
                           ReconstructPrefix prefix = {});
Reconstruction reconstruct(const UniformGrid& u_star, const ModelSpec& model, bool data_informed,
                           const Observations* y);
/// Writes into `out`, reusing its storage.
void reconstruct_into(const UniformGrid& u_star, const ModelSpec& model, const ObservationWeights* weights,
                      ReconstructPrefix prefix, Reconstruction& out);

/// Single-cell acceptance ratio of the standard kernel:
/// log pi(Y|X*) - log pi(Y|X) + log W - log W*.
double acceptance_log_ratio_standard(const HiddenStates& x, const HiddenStates& x_star, const Observations& y,
                                     const ModelSpec& model, const BoundsGrids& bounds,
                                     const BoundsGrids& bounds_star);

/// Single-cell acceptance ratio of the data-informed kernel:
/// sum log c(X*) - sum log c(X) + log W - log W*.
double acceptance_log_ratio_data_informed(const BoundsGrids& bounds, const BoundsGrids& bounds_star);

/// Proposal-density ratio q(U | U*) / q(U* | U) for an ordered multi-cell move:
/// sum_i log(W - P_i) - log(W* - P*_i), with P_i the weight of the cells picked
/// before pick i. -infinity when the reverse move cannot regenerate `u`.
double selection_log_ratio(std::span<const Cell> cells, const UniformGrid& u, const BoundsGrids& bounds,
                           const BoundsGrids& bounds_star);
/// Same, given the old values u_c of the selected cells in pick order.
double selection_log_ratio(std::span<const Cell> cells, std::span<const double> old_values,
                           const BoundsGrids& bounds, const BoundsGrids& bounds_star);

/// Epsilon-greedy choice of how many cells of U to change.
class AdaptiveTuner {
 public:
  struct Choice {
    int kappa = 1;
    bool exploit = false;
  };

  AdaptiveTuner(double epsilon = 0.05, int kappa_max = 10, double target = 0.234);
  /// Always proposes `kappa`; never adapts.
  static AdaptiveTuner fixed(int kappa);

  Choice choose(Rng& rng) const;
  void record(int kappa, bool accepted);

  /// Exploitation choice: the kappa whose acceptance estimate is nearest the
  /// target, lowest kappa on ties.
  int greedy() const;
  double acceptance_estimate(int kappa) const;
  double probability(int kappa) const;
  /// Probability that the effective cell count equals `kappa_eff` when only
  /// `positive_cells` cells can be changed.
  double effective_probability(int kappa_eff, int positive_cells) const;

  int kappa_max() const { return kappa_max_; }
  double epsilon() const { return epsilon_; }
  double target() const { return target_; }
  long proposals(int kappa) const { return proposals_[kappa - 1]; }
  long acceptances(int kappa) const { return acceptances_[kappa - 1]; }

 private:
  double epsilon_;
  int kappa_max_;
  double target_;
  int fixed_kappa_ = 0;
  std::vector<long> proposals_;
  std::vector<long> acceptances_;
};

struct RipplerOptions {
  bool data_informed = false;
  double epsilon = 0.05;
  int kappa_max = 10;
  double target_acceptance = 0.234;
  int fixed_kappa = 0;  // > 0 disables adaptation
  /// Separate stream for the tuner's kappa choices; unset means the chain's stream.
  std::optional<std::uint64_t> tuner_seed;
};

class RipplerKernel final : public LatentKernel {
 public:
  explicit RipplerKernel(RipplerOptions options);

  std::string name() const override;
  UpdateRecord update(ChainState& state, Rng& rng) override;
  void invalidate() override;

  const AdaptiveTuner& tuner() const { return tuner_; }

 private:
  void refresh(const ChainState& state);

  RipplerOptions options_;
  AdaptiveTuner tuner_;
  std::optional<Rng> tuner_rng_;
  std::optional<ObservationWeights> weights_;
  std::optional<BoundsGrids> bounds_;
  const Observations* weights_for_ = nullptr;
  // Scratch reused across updates.
  UniformGrid u_;
  Grid<char> selected_;
  Reconstruction proposal_;
  std::vector<double> old_values_;
};

}  // namespace rippler
