#pragma once

#include <stdexcept>
#include <string>

namespace rippler {

/// A value broke one of its type's invariants (malformed rate row, bad dimensions, ...).
class InvariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An observation outside the observation model's domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A latent configuration or proposal with zero probability where a positive one is required.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user configuration (config file, CLI flags).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rippler
