#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <vector>

#include "rippler/csv_io.hpp"
#include "rippler/diagnostics.hpp"
#include "rippler/errors.hpp"
#include "rippler/fixtures.hpp"
#include "rippler/models.hpp"
#include "rippler/rippler.hpp"
#include "support.hpp"

using namespace rippler;

namespace {

ModelSpec sir_model(double beta, double gamma, InitialCondition init, int n) {
  (void)n;
  return {std::make_shared<SirDynamics>(SirParams{beta, gamma}, std::move(init)),
          std::make_shared<DiagnosticTest>(0.9, 0.9, std::vector<int>{sir::kInfective}, 3)};
}

ModelSpec sir52_model() {
  std::vector<int> init(100, sir::kSusceptible);
  init[0] = sir::kInfective;
  return sir_model(1.0 / 80, 0.1, InitialCondition::fixed(init, 3), 100);
}

}  // namespace

TEST(ComputeBounds, Examples) {
  // Initial probabilities (0.3, 0.7) and x = state 2.
  auto dynamics = std::make_shared<MultiStrainDynamics>(MultiStrainParams{1, {0.2}, {0.3}, 0.0},
                                                        InitialCondition::common(1, {0.3, 0.7}));
  ModelSpec two{dynamics, std::make_shared<DiagnosticTest>(0.9, 0.9, std::vector<int>{1}, 2)};
  HiddenStates x(2, 1, 1);
  const auto b = compute_bounds(x, two, nullptr);
  EXPECT_DOUBLE_EQ(b.lower(0, 0), 0.3);
  EXPECT_EQ(b.upper(0, 0), 1.0);

  // SIR: 8 infectives and beta = 1/80, susceptible -> infective; recovered stays recovered.
  std::vector<int> init(10, sir::kInfective);
  init[8] = sir::kSusceptible;
  init[9] = sir::kRecovered;
  const ModelSpec model = sir_model(1.0 / 80, 0.1, InitialCondition::fixed(init, 3), 10);
  HiddenStates path(2, 10, sir::kInfective);
  for (int j = 0; j < 10; ++j) path(0, j) = init[j];
  path(1, 9) = sir::kRecovered;
  const auto bounds = compute_bounds(path, model, nullptr);
  EXPECT_NEAR(bounds.lower(1, 8), 0.90483741803595957316, 1e-15);
  EXPECT_EQ(bounds.upper(1, 8), 1.0);
  EXPECT_EQ(bounds.lower(1, 9), 0.0);
  EXPECT_EQ(bounds.upper(1, 9), 1.0);
  EXPECT_EQ(bounds.weight({1, 9}), 0.0);
}

TEST(ComputeBounds, InfeasibleTransitionNamesTheCell) {
  const Fixture f = tiny_sir_fixture();
  HiddenStates x(3, 2, sir::kSusceptible);
  x(1, 1) = sir::kRecovered;  // S -> R directly
  try {
    compute_bounds(x, f.model, nullptr);
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_NE(std::string(e.what()).find("t=2"), std::string::npos) << e.what();
  }
}

TEST(ComputeBounds, DataInformedZeroNormaliserIsInfeasible) {
  // Recovery code "R" at t=1 for an individual that is infective at t=0 and can
  // only stay or recover: fine. A code "I" for someone with no infectives around
  // and currently susceptible has c = 0.
  auto dynamics = std::make_shared<SirDynamics>(SirParams{0.5, 0.5}, InitialCondition::fixed({0, 0}, 3));
  ModelSpec model{dynamics, std::make_shared<RecoveryObservation>(0, 1, 2)};
  Observations y(2, 2);
  y(1, 0) = static_cast<int>(RecoveryCode::kInfective);
  const ObservationWeights weights(model, y);
  EXPECT_THROW(compute_bounds(HiddenStates(2, 2, 0), model, &weights), InfeasibleError);
}

TEST(ModifyRow, ReweightsAndReturnsLogNormaliser) {
  std::vector<double> p{0.2, 0.8};
  const std::vector<double> f{0.5, 0.25};
  const double log_c = modify_row(p, f);
  EXPECT_NEAR(std::exp(log_c), 0.3, 1e-15);
  EXPECT_NEAR(p[0], 0.1 / 0.3, 1e-15);
  EXPECT_NEAR(p[1], 0.2 / 0.3, 1e-15);
  std::vector<double> q{1.0, 0.0};
  EXPECT_EQ(modify_row(q, std::vector<double>{0.0, 1.0}), -std::numeric_limits<double>::infinity());
}

TEST(RoundTrip, BoundsMaterialiseReconstructIsIdentity) {
  Rng rng(101);
  for (int rep = 0; rep < 300; ++rep) {
    const auto inst = testkit::random_instance(rep % 3, rng);
    for (bool di : {false, true}) {
      const ObservationWeights weights(inst.model, inst.y);
      const auto bounds = compute_bounds(inst.x, inst.model, di ? &weights : nullptr);
      const auto u = materialise_u(bounds, rng);
      for (double v : u.values()) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
      }
      const auto rec = reconstruct(u, inst.model, di ? &weights : nullptr);
      ASSERT_TRUE(rec.feasible);
      EXPECT_EQ(rec.x, inst.x);
      if (!di) EXPECT_EQ(simulate_noncentred(*inst.model.dynamics, u), inst.x);
    }
  }
}

TEST(SelectCells, WeightsAndAbsorbingCells) {
  BoundsGrids b;
  b.lower = UniformGrid(1, 3, 0.0);
  b.upper = UniformGrid(1, 3, 1.0);
  b.log_normaliser = Grid<double>(1, 3, 0.0);
  b.lower(0, 0) = 0.9;  // weight 0.9
  b.upper(0, 1) = 0.9;  // weight 0.1
  // cell 2 is absorbing: weight 0
  b.cumulative_weight = {0.9, 1.0, 1.0};
  b.total_weight = 1.0;
  b.positive_cells = 2;
  EXPECT_NEAR(b.weight({0, 0}), 0.9, 1e-15);
  Rng rng(3);
  const int draws = 10000;
  int first = 0;
  for (int k = 0; k < draws; ++k) {
    const auto cells = select_cells(b, 1, rng);
    ASSERT_EQ(cells.size(), 1u);
    ASSERT_NE(cells[0].j, 2);
    first += cells[0].j == 0;
  }
  const double se = std::sqrt(0.9 * 0.1 / draws);
  EXPECT_NEAR(first / double(draws), 0.9, 3 * se);
  // Asking for more cells than have weight returns the positive ones only.
  const auto all = select_cells(b, 3, rng);
  EXPECT_EQ(all.size(), 2u);
}

TEST(ProposeUStar, ComplementRegions) {
  BoundsGrids b;
  b.lower = UniformGrid(1, 3, 0.0);
  b.upper = UniformGrid(1, 3, 1.0);
  b.lower(0, 0) = 0.9;
  b.upper(0, 1) = 0.4;
  b.lower(0, 2) = 0.3;
  b.upper(0, 2) = 0.6;
  UniformGrid u(1, 3, 0.5);
  u(0, 0) = 0.95;
  u(0, 1) = 0.2;
  Rng rng(4);
  const std::vector<Cell> cells{{0, 0}, {0, 1}, {0, 2}};
  int below = 0;
  const int draws = 10000;
  for (int k = 0; k < draws; ++k) {
    const auto us = propose_u_star(u, cells, b, rng);
    EXPECT_LT(us(0, 0), 0.9);
    EXPECT_GT(us(0, 0), 0.0);
    EXPECT_GE(us(0, 1), 0.4);
    EXPECT_LT(us(0, 1), 1.0);
    EXPECT_TRUE(us(0, 2) < 0.3 || us(0, 2) >= 0.6);
    below += us(0, 2) < 0.3;
  }
  const double p = 0.3 / 0.7;
  EXPECT_NEAR(below / double(draws), p, 3 * std::sqrt(p * (1 - p) / draws));
}

TEST(Reconstruct, UnchangedUGivesSameX) {
  const Fixture f = tiny_sis_fixture();
  Rng rng(5);
  const HiddenStates x = [&] {
    HiddenStates v(3, 2, 0);
    v(0, 1) = 1;
    v(1, 1) = 1;
    v(2, 0) = 1;
    return v;
  }();
  const auto bounds = compute_bounds(x, f.model, nullptr);
  EXPECT_EQ(reconstruct(materialise_u(bounds, rng), f.model, nullptr).x, x);
}

TEST(Reconstruct, AbsorbedIndividualConfinesTheRipple) {
  // Individual 1 is recovered throughout; changing its t=0 cell moves only its own column.
  auto dynamics = std::make_shared<SirDynamics>(SirParams{0.4, 0.3}, InitialCondition::common(3, {0.5, 0.2, 0.3}));
  ModelSpec model{dynamics, std::make_shared<DiagnosticTest>(0.9, 0.9, std::vector<int>{1}, 3)};
  HiddenStates x(4, 3, sir::kSusceptible);
  for (int t = 0; t < 4; ++t) x(t, 1) = sir::kRecovered;
  const auto bounds = compute_bounds(x, model, nullptr);
  Rng rng(6);
  auto u = materialise_u(bounds, rng);
  u(0, 1) = 0.1;  // susceptible at t=0 instead
  const auto rec = reconstruct(u, model, nullptr);
  for (int t = 0; t < 4; ++t) {
    EXPECT_EQ(rec.x(t, 0), x(t, 0));
    EXPECT_EQ(rec.x(t, 2), x(t, 2));
  }
  EXPECT_EQ(rec.x(0, 1), sir::kSusceptible);
}

TEST(Reconstruct, GoldenSingleCellRipple) {
  const ModelSpec model = sir52_model();
  const auto x = read_states_file(testkit::source_path("data/sir-5.2/X.csv"));
  std::ifstream us(testkit::source_path("tests/data/sir52_ustar.csv"));
  const auto u_star = read_uniforms(us);
  const auto golden = read_states_file(testkit::source_path("tests/data/sir52_xstar.csv"));
  const auto rec = reconstruct(u_star, model, nullptr);
  ASSERT_TRUE(rec.feasible);
  EXPECT_EQ(rec.x, golden);
  EXPECT_NE(rec.x, x);
}

TEST(AcceptanceRatio, IdentityAndNoData) {
  const Fixture f = tiny_sis_fixture();
  HiddenStates x(3, 2, 0);
  x(0, 1) = 1;
  x(1, 1) = 1;
  x(2, 0) = 1;
  const ObservationWeights weights(f.model, f.y);
  const auto b = compute_bounds(x, f.model, nullptr);
  EXPECT_EQ(acceptance_log_ratio_standard(x, x, f.y, f.model, b, b), 0.0);
  const auto bdi = compute_bounds(x, f.model, &weights);
  EXPECT_EQ(acceptance_log_ratio_data_informed(bdi, bdi), 0.0);

  // Without observations the data-informed rows equal the prior rows and c = 1.
  const Observations empty(3, 2);
  const ObservationWeights none(f.model, empty);
  const auto b_none = compute_bounds(x, f.model, &none);
  EXPECT_EQ(b_none.transition_log_normaliser(), 0.0);
  for (int t = 0; t < 3; ++t) {
    for (int j = 0; j < 2; ++j) {
      EXPECT_EQ(b_none.lower(t, j), b.lower(t, j));
      EXPECT_EQ(b_none.upper(t, j), b.upper(t, j));
    }
  }
}

TEST(Propositions, PriorCancellation) {
  Rng rng(31);
  for (int rep = 0; rep < 100; ++rep) {
    const auto inst = testkit::random_instance(rep % 3, rng, 3, 4);
    const auto b = compute_bounds(inst.x, inst.model, nullptr);
    double log_q1 = 0.0;
    for (int t = 0; t < inst.space.num_timepoints; ++t) {
      for (int j = 0; j < inst.space.num_individuals; ++j) log_q1 -= std::log(b.upper(t, j) - b.lower(t, j));
    }
    EXPECT_NEAR(latent_log_prior(inst.x, *inst.model.dynamics) + log_q1, 0.0, 1e-9);
  }
}

TEST(Propositions, DataInformedCancellation) {
  Rng rng(32);
  for (int rep = 0; rep < 100; ++rep) {
    const auto inst = testkit::random_instance(rep % 3, rng, 3, 4);
    const ObservationWeights weights(inst.model, inst.y);
    const auto b = compute_bounds(inst.x, inst.model, &weights);
    double log_q1 = 0.0;
    double log_c = 0.0;
    for (int t = 0; t < inst.space.num_timepoints; ++t) {
      for (int j = 0; j < inst.space.num_individuals; ++j) {
        log_q1 -= std::log(b.upper(t, j) - b.lower(t, j));
        log_c += b.log_normaliser(t, j);
      }
    }
    const double lhs = observation_loglik_total(inst.y, inst.x, inst.model) +
                       latent_log_prior(inst.x, *inst.model.dynamics) + log_q1;
    EXPECT_NEAR(lhs, log_c, 1e-9);
  }
}

TEST(Tuner, ExplorationIsUniform) {
  AdaptiveTuner tuner(1.0, 5, 0.234);
  Rng rng(7);
  std::vector<int> hits(6, 0);
  const int draws = 10000;
  for (int k = 0; k < draws; ++k) ++hits[tuner.choose(rng).kappa];
  const double se = std::sqrt(0.2 * 0.8 / draws);
  for (int k = 1; k <= 5; ++k) EXPECT_NEAR(hits[k] / double(draws), 0.2, 3 * se);
}

TEST(Tuner, GreedyPicksNearestTarget) {
  AdaptiveTuner tuner(0.0, 3, 0.234);
  EXPECT_EQ(tuner.acceptance_estimate(2), 0.234);  // untried: optimistic prior
  EXPECT_EQ(tuner.greedy(), 1);                     // all tied: lowest kappa
  const double rates[] = {0.5, 0.25, 0.1};
  for (int k = 1; k <= 3; ++k) {
    for (int i = 0; i < 10000; ++i) tuner.record(k, i < rates[k - 1] * 10000);
  }
  Rng rng(8);
  EXPECT_EQ(tuner.choose(rng).kappa, 2);
  EXPECT_TRUE(tuner.choose(rng).exploit);
}

TEST(Tuner, SettlesOnKappaNearestTarget) {
  AdaptiveTuner tuner(0.05, 5, 0.234);
  const double rates[] = {0.6, 0.3, 0.2, 0.15, 0.12};
  Rng rng(9);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> exploit_hits(6, 0);
  for (int i = 0; i < 40000; ++i) {
    const auto c = tuner.choose(rng);
    tuner.record(c.kappa, unit(rng) < rates[c.kappa - 1]);
    if (i >= 20000 && c.exploit) ++exploit_hits[c.kappa];
  }
  EXPECT_EQ(std::max_element(exploit_hits.begin(), exploit_hits.end()) - exploit_hits.begin(), 3);
}

TEST(Tuner, EffectiveProbabilityFoldsTheTail) {
  AdaptiveTuner tuner(1.0, 4, 0.234);
  EXPECT_NEAR(tuner.effective_probability(1, 10), 0.25, 1e-15);
  EXPECT_NEAR(tuner.effective_probability(2, 2), 0.75, 1e-15);
  const auto fixed = AdaptiveTuner::fixed(3);
  EXPECT_EQ(fixed.effective_probability(3, 5), 1.0);
  EXPECT_EQ(fixed.effective_probability(2, 2), 1.0);
}

TEST(Kernel, ZeroUpdatesLeaveStateUnchanged) {
  const Fixture f = tiny_sis_fixture();
  HiddenStates x(3, 2, 0);
  x(0, 1) = 1;
  ChainState state{f.model, f.y, x};
  RipplerKernel kernel({});
  ChainOptions options;
  options.iterations = 5;
  options.updates_per_iteration = 0;
  Rng rng(1);
  run_chain(state, kernel, options, rng);
  EXPECT_EQ(state.x, x);
}

TEST(Kernel, NoDataAcceptanceIsWeightRatio) {
  // kappa = 1 and no observations: the log ratio is log W - log W*.
  auto dynamics = std::make_shared<SirDynamics>(SirParams{0.3, 0.2}, InitialCondition::common(4, {0.7, 0.3, 0.0}));
  ModelSpec model{dynamics, std::make_shared<DiagnosticTest>(0.9, 0.9, std::vector<int>{1}, 3)};
  const Observations y(6, 4);
  Rng rng(12);
  ChainState state{model, y, simulate_centred(*dynamics, {3, 4, 6}, rng)};
  RipplerOptions options;
  options.fixed_kappa = 1;
  RipplerKernel kernel(options);
  double expected_accepts = 0.0;
  int accepts = 0;
  const int updates = 20000;
  for (int k = 0; k < updates; ++k) {
    const HiddenStates before = state.x;
    const double w = compute_bounds(before, model, nullptr).total_weight;
    const auto rec = kernel.update(state, rng);
    ASSERT_TRUE(rec.proposed);
    expected_accepts += std::min(1.0, std::exp(rec.log_ratio));
    accepts += rec.accepted;
    if (rec.accepted) {
      const double w_star = compute_bounds(state.x, model, nullptr).total_weight;
      EXPECT_NEAR(rec.log_ratio, std::log(w) - std::log(w_star), 1e-9);
    }
  }
  EXPECT_NEAR(accepts, expected_accepts, 4 * std::sqrt(expected_accepts));
}

TEST(Kernel, KappaOneMatchesClosedFormRatio) {
  const Fixture f = tiny_sir_fixture();
  for (bool di : {false, true}) {
    Rng rng(13);
    HiddenStates x(3, 2, sir::kSusceptible);
    x(0, 1) = sir::kInfective;
    x(1, 1) = sir::kInfective;
    x(2, 1) = sir::kInfective;
    x(1, 0) = sir::kInfective;
    x(2, 0) = sir::kInfective;
    ChainState state{f.model, f.y, x};
    RipplerOptions options;
    options.fixed_kappa = 1;
    options.data_informed = di;
    RipplerKernel kernel(options);
    const ObservationWeights weights(f.model, f.y);
    for (int k = 0; k < 5000; ++k) {
      const HiddenStates before = state.x;
      const auto b = compute_bounds(before, f.model, di ? &weights : nullptr);
      const auto rec = kernel.update(state, rng);
      if (!rec.accepted) continue;
      const auto b_star = compute_bounds(state.x, f.model, di ? &weights : nullptr);
      const double expected = di ? acceptance_log_ratio_data_informed(b, b_star)
                                 : acceptance_log_ratio_standard(before, state.x, f.y, f.model, b, b_star);
      EXPECT_NEAR(rec.log_ratio, expected, 1e-9);
    }
  }
}

TEST(Kernel, EveryProposalMovesTheEarliestCell) {
  const ModelSpec model = sir52_model();
  const auto y = read_observations_file(testkit::source_path("data/sir-5.2/Y.csv"));
  Rng rng(14);
  ChainState state{model, y, initial_latent_state(model, y, false, rng)};
  for (bool di : {false, true}) {
    RipplerOptions options;
    options.data_informed = di;
    RipplerKernel kernel(options);
    for (int k = 0; k < 2000; ++k) {
      const auto rec = kernel.update(state, rng);
      ASSERT_TRUE(rec.proposed);
      EXPECT_GE(rec.ripple_size, 1);
      EXPECT_TRUE(rec.earliest_flipped);
    }
  }
}

TEST(Kernel, DetailedBalanceOnTinyInstance) {
  // Estimate one-step transition probabilities from every configuration and
  // compare pi(X) P(X, X') with pi(X') P(X', X).
  const Fixture f = tiny_sis_fixture();
  const auto post = enumerate_posterior(f.model, f.y, f.space);
  for (bool di : {false, true}) {
    RipplerOptions options;
    options.fixed_kappa = 1;
    options.data_informed = di;
    Rng rng(15);
    const std::size_t n = post.probability.size();
    std::vector<std::vector<double>> p(n, std::vector<double>(n, 0.0));
    const int reps = 20000;
    for (std::size_t a = 0; a < n; ++a) {
      if (post.probability[a] == 0.0) continue;
      RipplerKernel kernel(options);
      const HiddenStates start = configuration_from_id(a, f.space);
      for (int r = 0; r < reps; ++r) {
        ChainState state{f.model, f.y, start};
        kernel.update(state, rng);
        kernel.invalidate();
        p[a][configuration_id(state.x, 2)] += 1.0 / reps;
      }
    }
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        const double flow_ab = post.probability[a] * p[a][b];
        const double flow_ba = post.probability[b] * p[b][a];
        // Poisson standard errors, with counts floored so that rare moves seen
        // once or twice do not produce a near-zero error bar.
        const double count_ab = std::max(p[a][b] * reps, 10.0);
        const double count_ba = std::max(p[b][a] * reps, 10.0);
        const double se = std::hypot(post.probability[a] * std::sqrt(count_ab), post.probability[b] * std::sqrt(count_ba)) / reps;
        EXPECT_LE(std::abs(flow_ab - flow_ba), 5 * se) << (di ? "di " : "std ") << a << " <-> " << b;
      }
    }
  }
}
