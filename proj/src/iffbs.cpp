#include "rippler/iffbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rippler/errors.hpp"

namespace rippler {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void normalise_or_throw(std::span<double> row, int t) {
  double total = 0.0;
  for (double v : row) total += v;
  if (!(total > 0.0)) {
    throw InfeasibleError("iFFBS filter has no mass at t=" + std::to_string(t + 1));
  }
  for (double& v : row) v /= total;
}

}  // namespace

FilterTable iffbs_filter(int i, const HiddenStates& x, const Observations& y, const ModelSpec& model) {
  const int num_timepoints = x.num_timepoints();
  const int num_individuals = x.num_individuals();
  const int num_states = model.num_states();
  if (i < 0 || i >= num_individuals) throw InvariantError("iFFBS: individual index out of range");
  FilterTable table{Grid<double>(num_timepoints, num_states, 0.0)};

  std::vector<double> row(num_states);
  std::vector<double> log_coupling(num_states);
  Snapshot snap;
  for (int t = 0; t < num_timepoints; ++t) {
    auto alpha = table.probs.row(t);
    if (t == 0) {
      model.dynamics->initial_probs(i, alpha);
    } else {
      // Prediction with i's own row, under the snapshot where i was in r.
      std::fill(alpha.begin(), alpha.end(), 0.0);
      snap.assign(x.row(t - 1), num_states);
      const auto previous = table.probs.row(t - 1);
      for (int r = 0; r < num_states; ++r) {
        if (previous[r] == 0.0) continue;
        snap.set(i, r);
        model.dynamics->transition_probs(t - 1, i, r, snap, row);
        for (int s = 0; s < num_states; ++s) alpha[s] += previous[r] * row[s];
      }
    }
    for (int s = 0; s < num_states; ++s) {
      if (alpha[s] > 0.0) alpha[s] *= std::exp(model.obs_loglik(y(t, i), s));
    }

    if (t + 1 < num_timepoints && num_individuals > 1) {
      snap.assign(x.row(t), num_states);
      double best = kNegInf;
      for (int s = 0; s < num_states; ++s) {
        log_coupling[s] = 0.0;
        if (alpha[s] == 0.0) continue;
        snap.set(i, s);
        // Running product, folded into the log only when it nears underflow.
        double product = 1.0;
        for (int j = 0; j < num_individuals && product > 0.0; ++j) {
          if (j == i) continue;
          model.dynamics->transition_probs(t, j, x(t, j), snap, row);
          product *= row[x(t + 1, j)];
          if (product < 1e-200) {
            log_coupling[s] += std::log(product);
            product = 1.0;
          }
        }
        log_coupling[s] = product > 0.0 ? log_coupling[s] + std::log(product) : kNegInf;
        best = std::max(best, log_coupling[s]);
      }
      if (best == kNegInf) throw InfeasibleError("iFFBS coupling factor is zero at t=" + std::to_string(t + 1));
      for (int s = 0; s < num_states; ++s) {
        if (alpha[s] > 0.0) alpha[s] *= std::exp(log_coupling[s] - best);
      }
    }
    normalise_or_throw(alpha, t);
  }
  return table;
}

std::vector<int> iffbs_backward_sample(const FilterTable& table, int i, const HiddenStates& x,
                                       const ModelSpec& model, Rng& rng) {
  const int num_timepoints = table.probs.num_timepoints();
  const int num_states = table.probs.num_individuals();
  std::vector<int> path(num_timepoints);
  std::vector<double> weights(num_states);
  std::vector<double> row(num_states);

  auto draw = [&rng](const std::vector<double>& w) {
    std::discrete_distribution<int> pick(w.begin(), w.end());
    return pick(rng);
  };

  const auto last = table.probs.row(num_timepoints - 1);
  weights.assign(last.begin(), last.end());
  path[num_timepoints - 1] = draw(weights);

  Snapshot snap;
  for (int t = num_timepoints - 2; t >= 0; --t) {
    // The coupling factor is already part of the filtered row.
    snap.assign(x.row(t), num_states);
    const auto alpha = table.probs.row(t);
    for (int s = 0; s < num_states; ++s) {
      weights[s] = 0.0;
      if (alpha[s] == 0.0) continue;
      snap.set(i, s);
      model.dynamics->transition_probs(t, i, s, snap, row);
      weights[s] = alpha[s] * row[path[t + 1]];
    }
    path[t] = draw(weights);
  }
  return path;
}

UpdateRecord IffbsKernel::update(ChainState& state, Rng& rng) {
  std::uniform_int_distribution<int> who(0, state.x.num_individuals() - 1);
  const int i = who(rng);
  const FilterTable table = iffbs_filter(i, state.x, state.y, state.model);
  const std::vector<int> path = iffbs_backward_sample(table, i, state.x, state.model, rng);

  UpdateRecord rec;
  rec.proposed = true;
  rec.accepted = true;
  for (int t = 0; t < state.x.num_timepoints(); ++t) {
    rec.ripple_size += state.x(t, i) != path[t];
    state.x(t, i) = path[t];
  }
  return rec;
}

}  // namespace rippler
