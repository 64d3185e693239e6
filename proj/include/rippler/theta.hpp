#pragma once

// Parameter updates for the Metropolis-within-Gibbs driver.

#include "rippler/sampler.hpp"

namespace rippler {

/// Random-walk Metropolis on (log beta, log gamma) of an SIR model with a flat
/// prior on the log scale. Proposes both rates jointly with N(0, scale^2) steps.
ParameterUpdate sir_random_walk(double scale);

}  // namespace rippler
