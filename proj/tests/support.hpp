#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "rippler/chmm.hpp"
#include "rippler/models.hpp"

namespace rippler::testkit {

inline std::string source_path(const std::string& relative) {
  return std::string(RIPPLER_SOURCE_DIR) + "/" + relative;
}

/// Random small model of one of the three kinds, with a diagnostic test and a
/// simulated dataset. kind: 0 sir, 1 seir, 2 multistrain.
struct RandomInstance {
  ModelSpec model;
  StateSpace space;
  HiddenStates x;
  Observations y;
};

inline RandomInstance random_instance(int kind, Rng& rng, int max_individuals = 6, int max_timepoints = 8) {
  std::uniform_int_distribution<int> n_dist(2, max_individuals);
  std::uniform_int_distribution<int> t_dist(2, max_timepoints);
  std::uniform_real_distribution<double> rate(0.05, 0.9);
  const int n = n_dist(rng);
  const int t = t_dist(rng);
  std::shared_ptr<const Dynamics> dynamics;
  std::vector<int> targets;
  int s = 0;
  if (kind == 0) {
    s = 3;
    dynamics = std::make_shared<SirDynamics>(SirParams{rate(rng), rate(rng)},
                                             InitialCondition::common(n, {0.6, 0.3, 0.1}));
    targets = {sir::kInfective};
  } else if (kind == 1) {
    const int exposed = std::uniform_int_distribution<int>(1, 3)(rng);
    SeirParams p{exposed, rate(rng), std::vector<double>(exposed), rate(rng)};
    for (double& v : p.sigmas) v = rate(rng);
    s = p.num_states();
    std::vector<double> init(s, 0.0);
    init[0] = 0.5;
    init[p.infective_state()] = 0.3;
    init[1] = 0.2;
    dynamics = std::make_shared<SeirDynamics>(p, InitialCondition::common(n, init));
    targets = {p.infective_state()};
  } else {
    const int strains = std::uniform_int_distribution<int>(1, 3)(rng);
    MultiStrainParams p{strains, std::vector<double>(strains), std::vector<double>(strains), 0.3};
    for (int i = 0; i < strains; ++i) {
      p.betas[i] = rate(rng);
      p.gammas[i] = rate(rng);
    }
    s = p.num_states();
    std::vector<double> init(s, 0.4 / strains);
    init[0] = 0.6;
    dynamics = std::make_shared<MultiStrainDynamics>(p, InitialCondition::common(n, init));
    for (int i = 1; i < s; ++i) targets.push_back(i);
  }
  auto test = std::make_shared<DiagnosticTest>(0.85, 0.9, targets, s, 0.4);
  RandomInstance out{{dynamics, test}, {s, n, t}, {}, {}};
  const Dataset data = simulate_dataset(*dynamics, out.space, *test, rng);
  out.x = data.x;
  out.y = data.y;
  return out;
}

}  // namespace rippler::testkit
