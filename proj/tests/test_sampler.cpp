#include <gtest/gtest.h>

#include <cmath>

#include "rippler/csv_io.hpp"
#include "rippler/fixtures.hpp"
#include "rippler/models.hpp"
#include "rippler/rippler.hpp"
#include "rippler/sampler.hpp"
#include "rippler/theta.hpp"
#include "support.hpp"

using namespace rippler;

TEST(RunChain, RecordsCountsAndObserver) {
  const Fixture f = tiny_sis_fixture();
  Rng rng(1);
  ChainState state{f.model, f.y, initial_latent_state(f.model, f.y, false, rng)};
  RipplerKernel kernel({});
  int observed = 0;
  ChainOptions options;
  options.iterations = 30;
  options.updates_per_iteration = 4;
  options.observer = [&](int k, const ChainState&) { EXPECT_EQ(k, observed++); };
  const auto result = run_chain(state, kernel, options, rng);
  EXPECT_EQ(observed, 31);
  EXPECT_EQ(result.records.size(), 120u);
  EXPECT_EQ(result.updates, 120);
  EXPECT_EQ(result.counts.iterations(), 30);
  EXPECT_EQ(result.majd.jumps(), 30);
  EXPECT_GE(result.update_seconds, 0.0);
  for (int k = 0; k < 30; ++k) {
    for (int t = 0; t < 3; ++t) EXPECT_EQ(result.counts.count(k, t, 0) + result.counts.count(k, t, 1), 2);
  }
}

TEST(InitialState, FeasibleForTestAndRecoveryData) {
  std::vector<int> init(100, sir::kSusceptible);
  init[0] = sir::kInfective;
  auto dynamics = std::make_shared<SirDynamics>(SirParams{1.0 / 80, 0.1}, InitialCondition::fixed(init, 3));
  Rng rng(2);
  const auto truth = simulate_recovery_dataset(*dynamics, {3, 100, 50}, sir::kInfective, sir::kRecovered, rng);
  ModelSpec recovery{dynamics, std::make_shared<RecoveryObservation>(0, 1, 2)};
  for (bool di : {false, true}) {
    const auto x = initial_latent_state(recovery, truth.y, di, rng);
    EXPECT_TRUE(std::isfinite(observation_loglik_total(truth.y, x, recovery)));
    EXPECT_TRUE(std::isfinite(latent_log_prior(x, *dynamics)));
  }
  ModelSpec test{dynamics, std::make_shared<DiagnosticTest>(0.9, 0.9, std::vector<int>{1}, 3)};
  const auto y = read_observations_file(testkit::source_path("data/sir-5.2/Y.csv"));
  const auto x = initial_latent_state(test, y, false, rng);
  EXPECT_TRUE(std::isfinite(latent_log_prior(x, *dynamics)));
}

TEST(ThetaUpdate, RandomWalkMovesParametersAndKeepsChainValid) {
  const Fixture f = tiny_sir_fixture();
  Rng rng(3);
  ChainState state{f.model, f.y, initial_latent_state(f.model, f.y, false, rng)};
  RipplerKernel kernel({});
  ChainOptions options;
  options.iterations = 500;
  options.updates_per_iteration = 2;
  int changes = 0;
  double last_beta = 0.9;
  options.observer = [&](int, const ChainState& s) {
    const double beta = dynamic_cast<const SirDynamics&>(*s.model.dynamics).params().beta;
    changes += beta != last_beta;
    last_beta = beta;
    EXPECT_TRUE(std::isfinite(latent_log_prior(s.x, *s.model.dynamics)));
  };
  run_chain(state, kernel, options, rng, sir_random_walk(0.2));
  EXPECT_GT(changes, 50);
}
