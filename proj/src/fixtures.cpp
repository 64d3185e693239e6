#include "rippler/fixtures.hpp"

#include <memory>

#include "rippler/errors.hpp"
#include "rippler/models.hpp"

namespace rippler {

Fixture tiny_sis_fixture() {
  MultiStrainParams params{1, {0.8}, {0.5}, 0.0};
  auto dynamics = std::make_shared<MultiStrainDynamics>(params, InitialCondition::common(2, {0.7, 0.3}));
  auto emission = std::make_shared<DiagnosticTest>(0.8, 0.9, std::vector<int>{1}, 2);
  Observations y(3, 2);
  y(0, 0) = 0;
  y(1, 1) = 1;
  y(2, 0) = 1;
  y(2, 1) = 0;
  return {"sis", {dynamics, emission}, y, {2, 2, 3}};
}

Fixture tiny_sir_fixture() {
  auto dynamics = std::make_shared<SirDynamics>(SirParams{0.9, 0.6}, InitialCondition::common(2, {0.6, 0.4, 0.0}));
  auto emission = std::make_shared<DiagnosticTest>(0.85, 0.9, std::vector<int>{sir::kInfective}, 3);
  Observations y(3, 2);
  y(0, 1) = 1;
  y(1, 0) = 1;
  y(2, 1) = 0;
  return {"sir", {dynamics, emission}, y, {3, 2, 3}};
}

Fixture single_chain_fixture() {
  // With one individual the SIS infection pressure is zero, so I -> S is the
  // only move; a common initial split keeps both paths alive.
  MultiStrainParams params{1, {0.7}, {0.4}, 0.0};
  auto dynamics = std::make_shared<MultiStrainDynamics>(params, InitialCondition::common(1, {0.4, 0.6}));
  auto emission = std::make_shared<DiagnosticTest>(0.75, 0.85, std::vector<int>{1}, 2);
  Observations y(6, 1);
  y(0, 0) = 1;
  y(2, 0) = 1;
  y(3, 0) = 0;
  y(5, 0) = 0;
  return {"hmm", {dynamics, emission}, y, {2, 1, 6}};
}

Fixture fixture_by_name(const std::string& name) {
  if (name == "sis") return tiny_sis_fixture();
  if (name == "sir") return tiny_sir_fixture();
  if (name == "hmm") return single_chain_fixture();
  throw ConfigError("unknown fixture '" + name + "' (expected sis, sir or hmm)");
}

std::vector<std::string> fixture_names() { return {"sis", "sir", "hmm"}; }

}  // namespace rippler
