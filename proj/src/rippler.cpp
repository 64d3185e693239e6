#include "rippler/rippler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rippler/errors.hpp"

namespace rippler {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string cell_name(int t, int j) {
  std::ostringstream os;
  os << "(t=" << t + 1 << ", j=" << j + 1 << ")";
  return os.str();
}

// Probabilities governing cell (t, j); `snap` holds the states at t - 1.
void governing_row(const Dynamics& dynamics, int t, int j, const HiddenStates& x, const Snapshot& snap,
                   std::span<double> row) {
  if (t == 0) {
    dynamics.initial_probs(j, row);
  } else {
    dynamics.transition_probs(t - 1, j, x(t - 1, j), snap, row);
  }
}

void finish_totals(BoundsGrids& b) {
  const auto& lo = b.lower.values();
  const auto& up = b.upper.values();
  b.cumulative_weight.resize(lo.size());
  double total = 0.0;
  int positive = 0;
  for (std::size_t k = 0; k < lo.size(); ++k) {
    const double w = 1.0 - up[k] + lo[k];
    total += w;
    positive += w > 0.0;
    b.cumulative_weight[k] = total;
  }
  b.total_weight = total;
  b.positive_cells = positive;
}

template <typename T>
void ensure_shape(Grid<T>& g, int num_timepoints, int num_individuals) {
  if (g.num_timepoints() != num_timepoints || g.num_individuals() != num_individuals) {
    g = Grid<T>(num_timepoints, num_individuals);
  }
}

// Uniform draw from (0, lower) U [upper, 1).
double draw_outside(double lower, double upper, Rng& rng) {
  std::uniform_real_distribution<double> dist(0.0, lower + (1.0 - upper));
  for (;;) {
    const double v = dist(rng);
    const double candidate = v < lower ? v : upper + (v - lower);
    if (candidate > 0.0 && candidate < 1.0 && (candidate < lower || candidate >= upper)) return candidate;
  }
}

}  // namespace

// ---- observation weights ----------------------------------------------------

ObservationWeights::ObservationWeights(const ModelSpec& model, const Observations& y)
    : num_states_(model.num_states()),
      cols_(y.num_individuals()),
      observed_(y.num_timepoints(), y.num_individuals(), 0),
      f_(y.size() * static_cast<std::size_t>(model.num_states()), 1.0) {
  for (int t = 0; t < y.num_timepoints(); ++t) {
    for (int j = 0; j < y.num_individuals(); ++j) {
      const auto& obs = y(t, j);
      if (!obs) continue;
      model.emission->check(*obs);
      observed_(t, j) = 1;
      double* f = f_.data() + (static_cast<std::size_t>(t) * cols_ + j) * num_states_;
      for (int s = 0; s < num_states_; ++s) f[s] = std::exp(model.emission->loglik(*obs, s));
    }
  }
}

double modify_row(std::span<double> probs, std::span<const double> likelihoods) {
  double c = 0.0;
  for (std::size_t s = 0; s < probs.size(); ++s) c += probs[s] * likelihoods[s];
  if (!(c > 0.0)) return kNegInf;
  for (std::size_t s = 0; s < probs.size(); ++s) probs[s] = probs[s] * likelihoods[s] / c;
  return std::log(c);
}

// ---- bounds -----------------------------------------------------------------

double BoundsGrids::transition_log_normaliser() const {
  double total = 0.0;
  for (int t = 1; t < log_normaliser.num_timepoints(); ++t) {
    for (double v : log_normaliser.row(t)) total += v;
  }
  return total;
}

BoundsGrids compute_bounds(const HiddenStates& x, const ModelSpec& model, const ObservationWeights* weights) {
  const int num_timepoints = x.num_timepoints();
  const int num_individuals = x.num_individuals();
  const int num_states = model.num_states();
  BoundsGrids b;
  b.lower = UniformGrid(num_timepoints, num_individuals);
  b.upper = UniformGrid(num_timepoints, num_individuals);
  b.log_normaliser = Grid<double>(num_timepoints, num_individuals, 0.0);
  std::vector<double> row(num_states);
  Snapshot snap;
  for (int t = 0; t < num_timepoints; ++t) {
    if (t > 0) snap.assign(x.row(t - 1), num_states);
    for (int j = 0; j < num_individuals; ++j) {
      governing_row(*model.dynamics, t, j, x, snap, row);
      if (weights != nullptr && weights->observed(t, j)) {
        const double log_c = modify_row(row, weights->likelihoods(t, j));
        if (log_c == kNegInf) {
          throw InfeasibleError("data-informed normaliser is zero at " + cell_name(t, j));
        }
        b.log_normaliser(t, j) = log_c;
      }
      const auto [lower, upper] = reproducing_interval(row, x(t, j));
      if (!(lower < upper)) {
        throw InfeasibleError("realised state has zero probability at " + cell_name(t, j));
      }
      b.lower(t, j) = lower;
      b.upper(t, j) = upper;
    }
  }
  finish_totals(b);
  return b;
}

BoundsGrids compute_bounds(const HiddenStates& x, const ModelSpec& model, bool data_informed,
                           const Observations* y) {
  if (!data_informed) return compute_bounds(x, model, nullptr);
  if (y == nullptr) throw InvariantError("data-informed bounds need observations");
  const ObservationWeights weights(model, *y);
  return compute_bounds(x, model, &weights);
}

UniformGrid materialise_u(const BoundsGrids& bounds, Rng& rng) {
  UniformGrid u(bounds.lower.num_timepoints(), bounds.lower.num_individuals());
  const auto& lo = bounds.lower.values();
  const auto& up = bounds.upper.values();
  auto& out = u.values();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = uniform_in(lo[k], up[k], rng);
  return u;
}

void materialise_u(const BoundsGrids& bounds, Rng& rng, int start_time, UniformGrid& u) {
  const int num_individuals = bounds.lower.num_individuals();
  ensure_shape(u, bounds.lower.num_timepoints(), num_individuals);
  const auto& lo = bounds.lower.values();
  const auto& up = bounds.upper.values();
  auto& out = u.values();
  for (std::size_t k = static_cast<std::size_t>(start_time) * num_individuals; k < out.size(); ++k) {
    out[k] = uniform_in(lo[k], up[k], rng);
  }
}

// ---- proposal ---------------------------------------------------------------

std::vector<Cell> select_cells(const BoundsGrids& bounds, int kappa, Rng& rng) {
  const int num_individuals = bounds.lower.num_individuals();
  const int picks = std::min(kappa, bounds.positive_cells);
  std::vector<Cell> cells;
  cells.reserve(std::max(picks, 0));
  const auto& cumulative = bounds.cumulative_weight;
  const auto& lo = bounds.lower.values();
  const auto& up = bounds.upper.values();
  auto start = [&](std::size_t i) { return i == 0 ? 0.0 : cumulative[i - 1]; };
  // Sequential picks without replacement: draw on the mass that remains and
  // skip over the intervals of cells already taken.
  std::vector<std::size_t> taken;
  double removed = 0.0;
  while (static_cast<int>(cells.size()) < picks) {
    double target = std::uniform_real_distribution<double>(0.0, bounds.total_weight - removed)(rng);
    for (const std::size_t p : taken) {
      if (target >= start(p)) target += cumulative[p] - start(p);
    }
    auto k = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), target) -
                                      cumulative.begin());
    if (k >= cumulative.size()) k = cumulative.size() - 1;
    // Rounding can land on a zero-weight or taken cell; step back to the nearest free positive one.
    auto free_positive = [&](std::size_t i) {
      return 1.0 - up[i] + lo[i] > 0.0 && std::find(taken.begin(), taken.end(), i) == taken.end();
    };
    while (k > 0 && !free_positive(k)) --k;
    while (k < cumulative.size() && !free_positive(k)) ++k;
    if (k >= cumulative.size()) throw InvariantError("no free positive-weight cell to select");
    taken.insert(std::upper_bound(taken.begin(), taken.end(), k), k);
    removed += cumulative[k] - start(k);
    cells.push_back(Cell{static_cast<int>(k) / num_individuals, static_cast<int>(k) % num_individuals});
  }
  return cells;
}

UniformGrid propose_u_star(const UniformGrid& u, std::span<const Cell> cells, const BoundsGrids& bounds, Rng& rng) {
  UniformGrid u_star = u;
  for (const Cell c : cells) u_star[c] = draw_outside(bounds.lower[c], bounds.upper[c], rng);
  return u_star;
}

void reconstruct_into(const UniformGrid& u_star, const ModelSpec& model, const ObservationWeights* weights,
                      ReconstructPrefix prefix, Reconstruction& r) {
  const int num_timepoints = u_star.num_timepoints();
  const int num_individuals = u_star.num_individuals();
  const int num_states = model.num_states();
  ensure_shape(r.x, num_timepoints, num_individuals);
  ensure_shape(r.bounds.lower, num_timepoints, num_individuals);
  ensure_shape(r.bounds.upper, num_timepoints, num_individuals);
  ensure_shape(r.bounds.log_normaliser, num_timepoints, num_individuals);
  r.feasible = true;
  r.infeasible_cell.reset();

  int start = 0;
  if (prefix.x != nullptr && prefix.bounds != nullptr && prefix.start_time > 0) {
    start = std::min(prefix.start_time, num_timepoints);
    const auto cells = static_cast<std::size_t>(start) * num_individuals;
    auto copy_prefix = [cells](const auto& from, auto& to) {
      std::copy_n(from.values().begin(), cells, to.values().begin());
    };
    copy_prefix(*prefix.x, r.x);
    copy_prefix(prefix.bounds->lower, r.bounds.lower);
    copy_prefix(prefix.bounds->upper, r.bounds.upper);
    copy_prefix(prefix.bounds->log_normaliser, r.bounds.log_normaliser);
  }
  thread_local std::vector<double> row;
  row.resize(num_states);
  Snapshot snap;
  for (int t = start; t < num_timepoints; ++t) {
    if (t > 0) snap.assign(r.x.row(t - 1), num_states);
    for (int j = 0; j < num_individuals; ++j) {
      governing_row(*model.dynamics, t, j, r.x, snap, row);
      double log_c = 0.0;
      if (weights != nullptr && weights->observed(t, j)) {
        log_c = modify_row(row, weights->likelihoods(t, j));
        if (log_c == kNegInf) {
          r.feasible = false;
          r.infeasible_cell = Cell{t, j};
          return;
        }
      }
      r.bounds.log_normaliser(t, j) = log_c;
      const int s = categorical_index(u_star(t, j), row);
      r.x(t, j) = s;
      const auto [lower, upper] = reproducing_interval(row, s);
      r.bounds.lower(t, j) = lower;
      r.bounds.upper(t, j) = upper;
    }
  }
  finish_totals(r.bounds);
}

Reconstruction reconstruct(const UniformGrid& u_star, const ModelSpec& model, const ObservationWeights* weights,
                           ReconstructPrefix prefix) {
  Reconstruction r;
  reconstruct_into(u_star, model, weights, prefix, r);
  return r;
}

Reconstruction reconstruct(const UniformGrid& u_star, const ModelSpec& model, bool data_informed,
                           const Observations* y) {
  if (!data_informed) return reconstruct(u_star, model, nullptr);
  if (y == nullptr) throw InvariantError("data-informed reconstruction needs observations");
  const ObservationWeights weights(model, *y);
  return reconstruct(u_star, model, &weights);
}

// ---- acceptance -------------------------------------------------------------

double acceptance_log_ratio_standard(const HiddenStates& x, const HiddenStates& x_star, const Observations& y,
                                     const ModelSpec& model, const BoundsGrids& bounds,
                                     const BoundsGrids& bounds_star) {
  if (x == x_star) return 0.0;
  const double loglik = observation_loglik_total(y, x, model);
  const double loglik_star = observation_loglik_total(y, x_star, model);
  if (loglik_star == kNegInf) return kNegInf;
  return loglik_star - loglik + std::log(bounds.total_weight) - std::log(bounds_star.total_weight);
}

double acceptance_log_ratio_data_informed(const BoundsGrids& bounds, const BoundsGrids& bounds_star) {
  return bounds_star.transition_log_normaliser() - bounds.transition_log_normaliser() +
         std::log(bounds.total_weight) - std::log(bounds_star.total_weight);
}

double selection_log_ratio(std::span<const Cell> cells, std::span<const double> old_values,
                           const BoundsGrids& bounds, const BoundsGrids& bounds_star) {
  double picked = 0.0;
  double picked_star = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell c = cells[i];
    const double w_star = bounds_star.weight(c);
    // The reverse move must be able to propose the old value back.
    if (!(w_star > 0.0) || (old_values[i] >= bounds_star.lower[c] && old_values[i] < bounds_star.upper[c])) {
      return kNegInf;
    }
    total += std::log(bounds.total_weight - picked) - std::log(bounds_star.total_weight - picked_star);
    picked += bounds.weight(c);
    picked_star += w_star;
  }
  return total;
}

double selection_log_ratio(std::span<const Cell> cells, const UniformGrid& u, const BoundsGrids& bounds,
                           const BoundsGrids& bounds_star) {
  std::vector<double> old_values;
  old_values.reserve(cells.size());
  for (const Cell c : cells) old_values.push_back(u[c]);
  return selection_log_ratio(cells, old_values, bounds, bounds_star);
}

// ---- tuner ------------------------------------------------------------------

AdaptiveTuner::AdaptiveTuner(double epsilon, int kappa_max, double target)
    : epsilon_(epsilon),
      kappa_max_(kappa_max),
      target_(target),
      proposals_(std::max(kappa_max, 1), 0),
      acceptances_(std::max(kappa_max, 1), 0) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0) || kappa_max < 1 || !(target > 0.0 && target < 1.0)) {
    throw InvariantError("tuner: need epsilon in [0,1], kappa_max >= 1, target in (0,1)");
  }
}

AdaptiveTuner AdaptiveTuner::fixed(int kappa) {
  if (kappa < 1) throw InvariantError("tuner: fixed kappa must be >= 1");
  AdaptiveTuner tuner(0.0, kappa, 0.234);
  tuner.fixed_kappa_ = kappa;
  return tuner;
}

double AdaptiveTuner::acceptance_estimate(int kappa) const {
  // One pseudo-proposal accepted at the target rate, so untried kappa start on target.
  return (static_cast<double>(acceptances_[kappa - 1]) + target_) /
         (static_cast<double>(proposals_[kappa - 1]) + 1.0);
}

int AdaptiveTuner::greedy() const {
  if (fixed_kappa_ > 0) return fixed_kappa_;
  int best = 1;
  double best_gap = std::abs(acceptance_estimate(1) - target_);
  for (int k = 2; k <= kappa_max_; ++k) {
    const double gap = std::abs(acceptance_estimate(k) - target_);
    if (gap < best_gap) {
      best = k;
      best_gap = gap;
    }
  }
  return best;
}

AdaptiveTuner::Choice AdaptiveTuner::choose(Rng& rng) const {
  if (fixed_kappa_ > 0) return {fixed_kappa_, false};
  std::bernoulli_distribution explore(epsilon_);
  if (explore(rng)) {
    std::uniform_int_distribution<int> any(1, kappa_max_);
    return {any(rng), false};
  }
  return {greedy(), true};
}

void AdaptiveTuner::record(int kappa, bool accepted) {
  if (kappa < 1 || kappa > kappa_max_) return;
  ++proposals_[kappa - 1];
  acceptances_[kappa - 1] += accepted;
}

double AdaptiveTuner::probability(int kappa) const {
  if (kappa < 1 || kappa > kappa_max_) return 0.0;
  if (fixed_kappa_ > 0) return kappa == fixed_kappa_ ? 1.0 : 0.0;
  return epsilon_ / kappa_max_ + (kappa == greedy() ? 1.0 - epsilon_ : 0.0);
}

double AdaptiveTuner::effective_probability(int kappa_eff, int positive_cells) const {
  if (kappa_eff < 1 || kappa_eff > positive_cells) return 0.0;
  if (kappa_eff < positive_cells) return probability(kappa_eff);
  double tail = 0.0;
  for (int k = kappa_eff; k <= kappa_max_; ++k) tail += probability(k);
  return tail;
}

// ---- kernel -----------------------------------------------------------------

namespace {

// Forward map for one kernel move. Selected cells carry their new uniforms in
// `u_star`. Every other cell keeps an implicit u ~ U[lower, upper) that is drawn
// only when the new row could send part of that interval to another state.
// Once a whole time-point matches X after the last selected cell, the rest is
// copied. Returns log pi(Y | X*) - log pi(Y | X) under `likelihoods`.
double ripple_reconstruct(const HiddenStates& x, const BoundsGrids& bounds, const Grid<char>& selected,
                          int first_time, int last_time, const UniformGrid& u_star, const ModelSpec& model,
                          const ObservationWeights* weights, const ObservationWeights& likelihoods, Rng& rng,
                          Reconstruction& r) {
  const int start = first_time;
  const int num_timepoints = x.num_timepoints();
  const int num_individuals = x.num_individuals();
  const int num_states = model.num_states();
  ensure_shape(r.x, num_timepoints, num_individuals);
  ensure_shape(r.bounds.lower, num_timepoints, num_individuals);
  ensure_shape(r.bounds.upper, num_timepoints, num_individuals);
  ensure_shape(r.bounds.log_normaliser, num_timepoints, num_individuals);
  r.feasible = true;
  r.infeasible_cell.reset();
  auto copy_rows = [&](int from_t, int to_t) {
    const auto first = static_cast<std::size_t>(from_t) * num_individuals;
    const auto count = static_cast<std::size_t>(to_t - from_t) * num_individuals;
    std::copy_n(x.values().begin() + first, count, r.x.values().begin() + first);
    std::copy_n(bounds.lower.values().begin() + first, count, r.bounds.lower.values().begin() + first);
    std::copy_n(bounds.upper.values().begin() + first, count, r.bounds.upper.values().begin() + first);
    std::copy_n(bounds.log_normaliser.values().begin() + first, count,
                r.bounds.log_normaliser.values().begin() + first);
  };
  copy_rows(0, start);
  double loglik_change = 0.0;

  thread_local std::vector<double> row;
  row.resize(num_states);
  Snapshot snap;
  for (int t = start; t < num_timepoints; ++t) {
    if (t > 0) snap.assign(r.x.row(t - 1), num_states);
    for (int j = 0; j < num_individuals; ++j) {
      governing_row(*model.dynamics, t, j, r.x, snap, row);
      double log_c = 0.0;
      if (weights != nullptr && weights->observed(t, j)) {
        log_c = modify_row(row, weights->likelihoods(t, j));
        if (log_c == kNegInf) {
          r.feasible = false;
          r.infeasible_cell = Cell{t, j};
          return kNegInf;
        }
      }
      r.bounds.log_normaliser(t, j) = log_c;
      int s = x(t, j);
      auto interval = reproducing_interval(row, s);
      if (selected(t, j)) {
        s = categorical_index(u_star(t, j), row);
        interval = reproducing_interval(row, s);
      } else if (!(interval.first <= bounds.lower(t, j) && bounds.upper(t, j) <= interval.second)) {
        s = categorical_index(uniform_in(bounds.lower(t, j), bounds.upper(t, j), rng), row);
        interval = reproducing_interval(row, s);
      }
      if (s != x(t, j) && likelihoods.observed(t, j)) {
        const auto f = likelihoods.likelihoods(t, j);
        loglik_change += std::log(f[s]) - std::log(f[x(t, j)]);
      }
      r.x(t, j) = s;
      r.bounds.lower(t, j) = interval.first;
      r.bounds.upper(t, j) = interval.second;
    }
    // Later rows depend on the past only through this time-point.
    if (t >= last_time && std::ranges::equal(r.x.row(t), x.row(t))) {
      copy_rows(t + 1, num_timepoints);
      break;
    }
  }
  finish_totals(r.bounds);
  return loglik_change;
}

}  // namespace

RipplerKernel::RipplerKernel(RipplerOptions options)
    : options_(options),
      tuner_(options.fixed_kappa > 0
                 ? AdaptiveTuner::fixed(options.fixed_kappa)
                 : AdaptiveTuner(options.epsilon, options.kappa_max, options.target_acceptance)) {
  if (options.tuner_seed) tuner_rng_.emplace(*options.tuner_seed);
}

std::string RipplerKernel::name() const { return options_.data_informed ? "rippler-data-informed" : "rippler"; }

void RipplerKernel::invalidate() {
  weights_.reset();
  bounds_.reset();
}

void RipplerKernel::refresh(const ChainState& state) {
  if (!weights_ || weights_for_ != &state.y) {
    weights_.emplace(state.model, state.y);
    weights_for_ = &state.y;
    bounds_.reset();
  }
  if (!bounds_) {
    bounds_ = compute_bounds(state.x, state.model, options_.data_informed ? &*weights_ : nullptr);
  }
}

UpdateRecord RipplerKernel::update(ChainState& state, Rng& rng) {
  refresh(state);
  const BoundsGrids& bounds = *bounds_;
  UpdateRecord rec;
  if (bounds.positive_cells == 0) return rec;

  const auto choice = tuner_.choose(tuner_rng_ ? *tuner_rng_ : rng);
  const int kappa_eff = std::min(choice.kappa, bounds.positive_cells);
  rec.kappa = choice.kappa;
  rec.exploit = choice.exploit;
  rec.proposed = true;

  const auto cells = select_cells(bounds, kappa_eff, rng);
  int first_time = cells.front().t;
  int last_time = cells.front().t;
  for (const Cell c : cells) {
    first_time = std::min(first_time, c.t);
    last_time = std::max(last_time, c.t);
  }

  ensure_shape(u_, state.x.num_timepoints(), state.x.num_individuals());
  ensure_shape(selected_, state.x.num_timepoints(), state.x.num_individuals());
  old_values_.clear();
  for (const Cell c : cells) {
    // The old u_c is uniform on its interval given X.
    old_values_.push_back(uniform_in(bounds.lower[c], bounds.upper[c], rng));
    u_[c] = draw_outside(bounds.lower[c], bounds.upper[c], rng);
    selected_[c] = 1;
  }

  const ObservationWeights* proposal_weights = options_.data_informed ? &*weights_ : nullptr;
  const double loglik_change = ripple_reconstruct(state.x, bounds, selected_, first_time, last_time, u_,
                                                  state.model, proposal_weights, *weights_, rng, proposal_);
  for (const Cell c : cells) selected_[c] = 0;
  if (!proposal_.feasible) {
    rec.log_ratio = -std::numeric_limits<double>::infinity();
    tuner_.record(choice.kappa, false);
    return rec;
  }

  const auto& x_old = state.x.values();
  const auto& x_new = proposal_.x.values();
  for (std::size_t k = static_cast<std::size_t>(first_time) * state.x.num_individuals(); k < x_old.size(); ++k) {
    rec.ripple_size += x_new[k] != x_old[k];
  }
  for (const Cell c : cells) {
    if (c.t == first_time && proposal_.x[c] == state.x[c]) rec.earliest_flipped = false;
  }

  double log_ratio = 0.0;
  if (options_.data_informed) {
    log_ratio = proposal_.bounds.transition_log_normaliser() - bounds.transition_log_normaliser();
  } else {
    log_ratio = loglik_change;
  }
  log_ratio += selection_log_ratio(cells, old_values_, bounds, proposal_.bounds);
  log_ratio += std::log(tuner_.effective_probability(kappa_eff, proposal_.bounds.positive_cells)) -
               std::log(tuner_.effective_probability(kappa_eff, bounds.positive_cells));
  rec.log_ratio = log_ratio;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (!std::isnan(log_ratio) && (log_ratio >= 0.0 || std::log(unit(rng)) < log_ratio)) {
    rec.accepted = true;
    std::swap(state.x, proposal_.x);
    std::swap(*bounds_, proposal_.bounds);
  }
  tuner_.record(choice.kappa, rec.accepted);
  return rec;
}

}  // namespace rippler
