#pragma once

// Individual forward-filtering backward-sampling: a Gibbs update that redraws one
// individual's whole trajectory from its full conditional given everyone else.

#include <string>
#include <vector>

#include "rippler/chmm.hpp"
#include "rippler/sampler.hpp"

namespace rippler {

/// T x S filtered probabilities for the updated individual; rows sum to one.
struct FilterTable {
  Grid<double> probs;
};

/// Forward filter for individual i. Each step combines i's own transition and
/// emission with the coupling factor prod_{j != i} p(x_{t+1,j} | x_{t,j}, i in s).
/// Throws InfeasibleError when a row has no mass.
FilterTable iffbs_filter(int i, const HiddenStates& x, const Observations& y, const ModelSpec& model);

/// Backward pass: a draw of x_{.,i} from its full conditional.
std::vector<int> iffbs_backward_sample(const FilterTable& table, int i, const HiddenStates& x,
                                       const ModelSpec& model, Rng& rng);

class IffbsKernel final : public LatentKernel {
 public:
  std::string name() const override { return "iffbs"; }
  /// Updates one individual chosen uniformly at random.
  UpdateRecord update(ChainState& state, Rng& rng) override;
};

}  // namespace rippler
