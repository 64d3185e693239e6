#pragma once

// CSV (de)serialisation of T x N grids. Header `t,j,value`; t, j and hidden
// states are written 1-based, missing observations as an empty field.

#include <iosfwd>
#include <string>

#include "rippler/chmm.hpp"

namespace rippler {

void write_states(std::ostream& out, const HiddenStates& x);
void write_observations(std::ostream& out, const Observations& y);
void write_uniforms(std::ostream& out, const UniformGrid& u);

HiddenStates read_states(std::istream& in);
Observations read_observations(std::istream& in);
UniformGrid read_uniforms(std::istream& in);

HiddenStates read_states_file(const std::string& path);
Observations read_observations_file(const std::string& path);

}  // namespace rippler
