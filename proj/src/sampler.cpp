#include "rippler/sampler.hpp"

#include <time.h>

#include <cmath>

#include "rippler/errors.hpp"
#include "rippler/rippler.hpp"

namespace rippler {

double thread_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

ChainResult run_chain(ChainState& state, LatentKernel& kernel, const ChainOptions& options, Rng& rng,
                      const ParameterUpdate& parameter_update) {
  if (options.iterations < 0 || options.updates_per_iteration < 0) {
    throw InvariantError("chain: iterations and updates per iteration must be non-negative");
  }
  ChainResult result;
  result.counts = StateCountSeries(state.x.num_timepoints(), state.model.num_states());
  if (options.keep_records) {
    result.records.reserve(static_cast<std::size_t>(options.iterations) * options.updates_per_iteration);
  }
  result.majd.add(state.x);
  if (options.observer) options.observer(0, state);

  double in_updates = 0.0;
  for (int k = 1; k <= options.iterations; ++k) {
    if (parameter_update && parameter_update(state, rng)) kernel.invalidate();
    const double start = thread_cpu_seconds();
    for (int m = 0; m < options.updates_per_iteration; ++m) {
      UpdateRecord rec = kernel.update(state, rng);
      if (options.keep_records) result.records.push_back(rec);
    }
    in_updates += thread_cpu_seconds() - start;
    result.updates += options.updates_per_iteration;
    result.majd.add(state.x);
    if (options.keep_counts) result.counts.add(state.x);
    if (options.observer) options.observer(k, state);
  }
  result.update_seconds = in_updates;
  return result;
}

namespace {

bool has_positive_likelihood(const HiddenStates& x, const Observations& y, const ModelSpec& model) {
  return observation_loglik_total(y, x, model) > -std::numeric_limits<double>::infinity();
}

// reach(t, j, s): some continuation from state s at t explains y_{t..T-1, j}.
// Transition supports are taken as the union over homogeneous snapshots, so
// reach over-approximates what the real population allows.
Grid<char> reachable_states(const ModelSpec& model, const ObservationWeights& weights, int num_timepoints,
                            int num_individuals) {
  const int num_states = model.num_states();
  const auto cols = static_cast<std::size_t>(num_individuals) * num_states;
  Grid<char> reach(num_timepoints, static_cast<int>(cols), 0);
  std::vector<std::vector<char>> support(num_states, std::vector<char>(num_states, 0));
  std::vector<double> row(num_states);
  std::vector<int> everyone(num_individuals);
  for (int t = num_timepoints - 1; t >= 0; --t) {
    for (int j = 0; j < num_individuals; ++j) {
      for (int s = 0; s < num_states; ++s) {
        char ok = !weights.observed(t, j) || weights.likelihoods(t, j)[s] > 0.0;
        if (ok && t + 1 < num_timepoints) {
          ok = 0;
          for (int k = 0; k < num_states && !ok; ++k) {
            std::fill(everyone.begin(), everyone.end(), k);
            everyone[j] = s;
            const Snapshot snap(everyone, num_states);
            model.dynamics->transition_probs(t, j, s, snap, row);
            for (int s2 = 0; s2 < num_states; ++s2) {
              if (row[s2] > 0.0 && reach(t + 1, j * num_states + s2)) {
                ok = 1;
                break;
              }
            }
          }
        }
        reach(t, j * num_states + s) = ok;
      }
    }
  }
  return reach;
}

std::optional<HiddenStates> guided_simulation(const ModelSpec& model, const ObservationWeights& weights,
                                              const Grid<char>& reach, Rng& rng) {
  const int num_timepoints = reach.num_timepoints();
  const int num_states = model.num_states();
  const int num_individuals = reach.num_individuals() / num_states;
  HiddenStates x(num_timepoints, num_individuals);
  std::vector<double> row(num_states);
  Snapshot snap;
  for (int t = 0; t < num_timepoints; ++t) {
    if (t > 0) snap.assign(x.row(t - 1), num_states);
    for (int j = 0; j < num_individuals; ++j) {
      if (t == 0) {
        model.dynamics->initial_probs(j, row);
      } else {
        model.dynamics->transition_probs(t - 1, j, x(t - 1, j), snap, row);
      }
      double total = 0.0;
      for (int s = 0; s < num_states; ++s) {
        if (weights.observed(t, j)) row[s] *= weights.likelihoods(t, j)[s];
        if (!reach(t, j * num_states + s)) row[s] = 0.0;
        total += row[s];
      }
      if (!(total > 0.0)) return std::nullopt;
      std::discrete_distribution<int> pick(row.begin(), row.end());
      x(t, j) = pick(rng);
    }
  }
  return x;
}

}  // namespace

HiddenStates initial_latent_state(const ModelSpec& model, const Observations& y, bool data_informed, Rng& rng,
                                  int max_attempts) {
  const StateSpace space{model.num_states(), y.num_individuals(), y.num_timepoints()};
  space.validate();
  const ObservationWeights weights(model, y);

  // Prior (or data-informed) forward simulation first; a short budget because
  // indicator observations make blind simulation hopeless.
  const int blind_attempts = std::min(max_attempts, 100);
  for (int attempt = 0; attempt < blind_attempts; ++attempt) {
    if (data_informed) {
      const UniformGrid u = draw_uniform_grid(space.num_timepoints, space.num_individuals, rng);
      Reconstruction r = reconstruct(u, model, &weights);
      if (r.feasible) return std::move(r.x);
    } else {
      HiddenStates x = simulate_centred(*model.dynamics, space, rng);
      if (has_positive_likelihood(x, y, model)) return x;
    }
  }

  const Grid<char> reach = reachable_states(model, weights, space.num_timepoints, space.num_individuals);
  for (int attempt = blind_attempts; attempt < max_attempts; ++attempt) {
    auto x = guided_simulation(model, weights, reach, rng);
    if (x && has_positive_likelihood(*x, y, model)) return std::move(*x);
  }
  throw InfeasibleError("no latent state with positive likelihood found after " + std::to_string(max_attempts) +
                        " attempts");
}

}  // namespace rippler
