#include "rippler/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>

#include "rippler/errors.hpp"

namespace rippler {

namespace {

template <typename Distance>
double majd(std::span<const HiddenStates> trace, Distance distance) {
  if (trace.size() < 2) return 0.0;
  double total = 0.0;
  for (std::size_t k = 1; k < trace.size(); ++k) {
    const auto& cur = trace[k].values();
    const auto& prev = trace[k - 1].values();
    for (std::size_t c = 0; c < cur.size(); ++c) total += distance(cur[c], prev[c]);
  }
  return total / static_cast<double>(trace.size() - 1);
}

// Type-7 quantile of sorted data.
double quantile(const std::vector<int>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

double majd_ordered(std::span<const HiddenStates> trace) {
  return majd(trace, [](int a, int b) { return std::abs(a - b); });
}

double majd_indicator(std::span<const HiddenStates> trace) {
  return majd(trace, [](int a, int b) { return a != b ? 1 : 0; });
}

void MajdAccumulator::add(const HiddenStates& x) {
  if (has_previous_) {
    const auto& cur = x.values();
    const auto& prev = previous_.values();
    long ordered = 0;
    long indicator = 0;
    for (std::size_t c = 0; c < cur.size(); ++c) {
      const int d = std::abs(cur[c] - prev[c]);
      ordered += d;
      indicator += d != 0;
    }
    ordered_sum_ += static_cast<double>(ordered);
    indicator_sum_ += static_cast<double>(indicator);
    ++jumps_;
  }
  previous_ = x;
  has_previous_ = true;
}

std::vector<int> state_counts(const HiddenStates& x, int num_states) {
  std::vector<int> counts(static_cast<std::size_t>(x.num_timepoints()) * num_states, 0);
  for (int t = 0; t < x.num_timepoints(); ++t) {
    for (int s : x.row(t)) ++counts[static_cast<std::size_t>(t) * num_states + s];
  }
  return counts;
}

void StateCountSeries::add(const HiddenStates& x) {
  const auto counts = state_counts(x, states_);
  counts_.insert(counts_.end(), counts.begin(), counts.end());
  ++iterations_;
}

std::vector<IntervalSummary> credible_intervals(const StateCountSeries& series, double level, double burn_in) {
  if (!(level >= 0.0 && level <= 1.0) || !(burn_in >= 0.0 && burn_in < 1.0)) {
    throw InvariantError("credible_intervals: level must lie in [0,1] and burn-in in [0,1)");
  }
  const int first = static_cast<int>(std::floor(burn_in * series.iterations()));
  if (series.iterations() - first < 1) {
    throw InvariantError("credible_intervals: no iterations after burn-in");
  }
  std::vector<IntervalSummary> out;
  std::vector<int> values;
  const double tail = (1.0 - level) / 2.0;
  for (int t = 0; t < series.num_timepoints(); ++t) {
    for (int s = 0; s < series.num_states(); ++s) {
      values.clear();
      for (int k = first; k < series.iterations(); ++k) values.push_back(series.count(k, t, s));
      std::sort(values.begin(), values.end());
      out.push_back({t, s, quantile(values, 0.5), quantile(values, tail), quantile(values, 1.0 - tail)});
    }
  }
  return out;
}

double interval_coverage(std::span<const IntervalSummary> intervals, const HiddenStates& truth, int num_states) {
  if (intervals.empty()) return 0.0;
  const auto counts = state_counts(truth, num_states);
  int inside = 0;
  for (const auto& ci : intervals) {
    const double value = counts[static_cast<std::size_t>(ci.t) * num_states + ci.state];
    inside += value >= ci.lower && value <= ci.upper;
  }
  return static_cast<double>(inside) / static_cast<double>(intervals.size());
}

std::uint64_t configuration_id(const HiddenStates& x, int num_states) {
  std::uint64_t id = 0;
  const auto& v = x.values();
  for (std::size_t c = v.size(); c-- > 0;) id = id * num_states + static_cast<std::uint64_t>(v[c]);
  return id;
}

HiddenStates configuration_from_id(std::uint64_t id, const StateSpace& space) {
  HiddenStates x(space.num_timepoints, space.num_individuals);
  for (auto& s : x.values()) {
    s = static_cast<int>(id % space.num_states);
    id /= space.num_states;
  }
  return x;
}

EnumeratedPosterior enumerate_posterior(const ModelSpec& model, const Observations& y, const StateSpace& space) {
  space.validate();
  const int cells = space.num_timepoints * space.num_individuals;
  double size = std::pow(static_cast<double>(space.num_states), cells);
  if (size > static_cast<double>(kMaxEnumeration)) {
    throw InvariantError("enumerate_posterior: S^(N*T) exceeds 1e6 configurations");
  }
  const auto total = static_cast<std::uint64_t>(std::llround(size));
  EnumeratedPosterior post{space.num_states, space.num_timepoints, space.num_individuals,
                           std::vector<double>(total)};
  std::vector<double> logp(total);
  double best = -std::numeric_limits<double>::infinity();
  for (std::uint64_t id = 0; id < total; ++id) {
    const auto x = configuration_from_id(id, space);
    const double lp = latent_log_prior(x, *model.dynamics) + observation_loglik_total(y, x, model);
    logp[id] = lp;
    best = std::max(best, lp);
  }
  if (!std::isfinite(best)) throw InfeasibleError("enumerate_posterior: every configuration has zero mass");
  double z = 0.0;
  for (std::uint64_t id = 0; id < total; ++id) {
    post.probability[id] = std::exp(logp[id] - best);
    z += post.probability[id];
  }
  for (double& p : post.probability) p /= z;
  return post;
}

double total_variation(std::span<const double> exact, std::span<const std::uint64_t> counts) {
  if (exact.size() != counts.size()) throw InvariantError("total_variation: size mismatch");
  const double n = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
  if (n == 0.0) throw InvariantError("total_variation: empty histogram");
  double tv = 0.0;
  for (std::size_t k = 0; k < exact.size(); ++k) tv += std::abs(exact[k] - static_cast<double>(counts[k]) / n);
  return 0.5 * tv;
}

}  // namespace rippler
