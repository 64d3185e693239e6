#pragma once

// Tiny instances small enough for exact enumeration.

#include <string>
#include <vector>

#include "rippler/chmm.hpp"

namespace rippler {

struct Fixture {
  std::string name;
  ModelSpec model;
  Observations y;
  StateSpace space;
};

/// Two-state SIS, N=2, T=3, four tests: 2^6 configurations.
Fixture tiny_sis_fixture();
/// SIR, N=2, T=3, nobody initially recovered: 3^6 configurations.
Fixture tiny_sir_fixture();
/// A single two-state chain (N=1, T=6): an ordinary HMM.
Fixture single_chain_fixture();

/// sis | sir | hmm
Fixture fixture_by_name(const std::string& name);
std::vector<std::string> fixture_names();

}  // namespace rippler
