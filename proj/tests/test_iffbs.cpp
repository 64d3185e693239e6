#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "rippler/diagnostics.hpp"
#include "rippler/errors.hpp"
#include "rippler/fixtures.hpp"
#include "rippler/iffbs.hpp"
#include "rippler/models.hpp"
#include "support.hpp"

using namespace rippler;

namespace {

class UniformChain final : public Dynamics {
 public:
  int num_states() const override { return 2; }
  std::string name() const override { return "uniform"; }
  void initial_probs(int, std::span<double> out) const override { std::fill(out.begin(), out.end(), 0.5); }
  void transition_probs(int, int, int, const Snapshot&, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.5);
  }
};

}  // namespace

TEST(IffbsFilter, SingleChainMatchesTextbookFilter) {
  const Fixture f = single_chain_fixture();
  const int T = f.space.num_timepoints;
  const double stay_i = std::exp(-0.4);
  const double a[2][2] = {{1.0, 0.0}, {1.0 - stay_i, stay_i}};
  auto emit = [&](int t, int s) {
    if (!f.y(t, 0)) return 1.0;
    const bool pos = *f.y(t, 0) == 1;
    return s == 1 ? (pos ? 0.75 : 0.25) : (pos ? 0.15 : 0.85);
  };
  double alpha[2] = {0.4 * emit(0, 0), 0.6 * emit(0, 1)};
  const auto table = iffbs_filter(0, HiddenStates(T, 1, 0), f.y, f.model);
  for (int t = 0; t < T; ++t) {
    if (t > 0) {
      const double next[2] = {(alpha[0] * a[0][0] + alpha[1] * a[1][0]) * emit(t, 0),
                              (alpha[0] * a[0][1] + alpha[1] * a[1][1]) * emit(t, 1)};
      alpha[0] = next[0];
      alpha[1] = next[1];
    }
    const double z = alpha[0] + alpha[1];
    alpha[0] /= z;
    alpha[1] /= z;
    EXPECT_NEAR(table.probs(t, 0), alpha[0], 1e-12) << "t=" << t;
    EXPECT_NEAR(table.probs(t, 1), alpha[1], 1e-12) << "t=" << t;
  }
}

TEST(IffbsFilter, UniformChainWithoutDataIsUniform) {
  ModelSpec model{std::make_shared<UniformChain>(), std::make_shared<DiagnosticTest>(0.9, 0.9, std::vector<int>{1}, 2)};
  const auto table = iffbs_filter(0, HiddenStates(5, 1, 0), Observations(5, 1), model);
  for (double p : table.probs.values()) EXPECT_NEAR(p, 0.5, 1e-15);
}

TEST(IffbsFilter, CouplingIndependentOfTargetLeavesFilterUnchanged) {
  // Others are recovered throughout, so their rows ignore individual 0.
  auto dynamics = std::make_shared<SirDynamics>(SirParams{0.5, 0.3}, InitialCondition::common(3, {0.5, 0.3, 0.2}));
  ModelSpec model{dynamics, std::make_shared<DiagnosticTest>(0.9, 0.9, std::vector<int>{1}, 3)};
  HiddenStates x(4, 3, sir::kRecovered);
  Observations y(4, 3);
  y(1, 0) = 1;
  const auto coupled = iffbs_filter(0, x, y, model);
  HiddenStates alone(4, 1, 0);
  Observations y_alone(4, 1);
  y_alone(1, 0) = 1;
  ModelSpec single{std::make_shared<SirDynamics>(SirParams{0.5, 0.3}, InitialCondition::common(1, {0.5, 0.3, 0.2})),
                   model.emission};
  const auto reference = iffbs_filter(0, alone, y_alone, single);
  for (std::size_t k = 0; k < reference.probs.size(); ++k) {
    EXPECT_NEAR(coupled.probs.values()[k], reference.probs.values()[k], 1e-12);
  }
}

TEST(IffbsFilter, IncompatibleObservationsThrow) {
  auto dynamics = std::make_shared<SirDynamics>(SirParams{0.5, 0.3}, InitialCondition::common(1, {1.0, 0.0, 0.0}));
  ModelSpec model{dynamics, std::make_shared<RecoveryObservation>(0, 1, 2)};
  Observations y(2, 1);
  y(0, 0) = static_cast<int>(RecoveryCode::kRecovered);
  EXPECT_THROW(iffbs_filter(0, HiddenStates(2, 1, 0), y, model), InfeasibleError);
}

TEST(IffbsBackward, DeterministicRowsGiveDeterministicPath) {
  const Fixture f = single_chain_fixture();
  FilterTable table{Grid<double>(6, 2, 0.0)};
  for (int t = 0; t < 6; ++t) table.probs(t, 1) = 1.0;
  Rng rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    EXPECT_EQ(iffbs_backward_sample(table, 0, HiddenStates(6, 1, 0), f.model, rng), std::vector<int>(6, 1));
  }
}

TEST(IffbsBackward, SingleChainDrawsMatchEnumeration) {
  const Fixture f = single_chain_fixture();
  const auto post = enumerate_posterior(f.model, f.y, f.space);
  const HiddenStates x(6, 1, 0);
  const auto table = iffbs_filter(0, x, f.y, f.model);
  Rng rng(2);
  std::vector<std::uint64_t> counts(post.probability.size(), 0);
  for (int k = 0; k < 100000; ++k) {
    const auto path = iffbs_backward_sample(table, 0, x, f.model, rng);
    HiddenStates draw(6, 1);
    for (int t = 0; t < 6; ++t) draw(t, 0) = path[t];
    ++counts[configuration_id(draw, 2)];
  }
  EXPECT_LT(total_variation(post.probability, counts), 0.02);
}

TEST(IffbsKernel, GibbsSweepsMatchEnumeration) {
  for (const std::string name : {"sis", "sir"}) {
    const Fixture f = fixture_by_name(name);
    const auto post = enumerate_posterior(f.model, f.y, f.space);
    Rng rng(3);
    ChainState state{f.model, f.y, initial_latent_state(f.model, f.y, false, rng)};
    IffbsKernel kernel;
    std::vector<std::uint64_t> counts(post.probability.size(), 0);
    for (int k = 0; k < 300000; ++k) {
      const auto rec = kernel.update(state, rng);
      EXPECT_TRUE(rec.accepted);
      ++counts[configuration_id(state.x, f.space.num_states)];
    }
    EXPECT_LT(total_variation(post.probability, counts), 0.02) << name;
  }
}
