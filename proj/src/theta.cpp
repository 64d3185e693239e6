#include "rippler/theta.hpp"

#include <cmath>
#include <memory>

#include "rippler/errors.hpp"
#include "rippler/models.hpp"

namespace rippler {

ParameterUpdate sir_random_walk(double scale) {
  if (!(scale > 0.0)) throw InvariantError("random walk: scale must be positive");
  return [scale](ChainState& state, Rng& rng) {
    const auto* current = dynamic_cast<const SirDynamics*>(state.model.dynamics.get());
    if (current == nullptr) throw InvariantError("random walk: parameter updates support the sir model only");
    std::normal_distribution<double> step(0.0, scale);
    SirParams proposed = current->params();
    proposed.beta *= std::exp(step(rng));
    proposed.gamma *= std::exp(step(rng));
    auto candidate = std::make_shared<SirDynamics>(proposed, current->initial());

    const double log_ratio = latent_log_prior(state.x, *candidate) - latent_log_prior(state.x, *current);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (std::isnan(log_ratio) || std::log(unit(rng)) >= log_ratio) return false;
    state.model.dynamics = std::move(candidate);
    return true;
  };
}

}  // namespace rippler
