#pragma once

// Run configuration: INI-style text files, built-in presets and seed splitting.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rippler/chmm.hpp"
#include "rippler/models.hpp"
#include "rippler/rippler.hpp"

namespace rippler {

struct ModelConfig {
  std::string kind = "sir";  // sir | seir | multistrain
  int num_individuals = 100;
  int num_timepoints = 50;
  double beta = 1.0 / 80.0;
  double gamma = 1.0 / 10.0;
  int exposed_steps = 1;
  double sigma = 0.0;  // every exposed stage; 0 means exposed_steps / 10
  int strains = 3;
  double strain_beta = 1.0 / 100.0;
  double strain_gamma = 1.0 / 10.0;
  double delta = 0.2;
  int initial_infectives = 1;  // per strain for multistrain

  int num_states() const;
};

struct ObservationConfig {
  std::string mode = "test";  // test | recovery
  double sensitivity = 0.9;
  double specificity = 0.9;
  double test_probability = 0.1;
};

struct SamplerConfig {
  std::string kernel = "rippler";  // rippler | rippler-data-informed | iffbs | rjmcmc-sir
  int iterations = 10'000;
  int updates_per_iteration = 10;
  double epsilon = 0.05;
  int kappa_max = 10;
  double target_acceptance = 0.234;
  int kappa = 0;  // > 0 fixes kappa
  double burn_in = 0.1;
  double level = 0.95;
  std::string theta_update = "fixed";  // fixed | random-walk
  double random_walk_scale = 0.05;
};

struct BenchmarkConfig {
  std::vector<int> num_states{4, 5, 6, 7, 8, 9, 10};
  std::vector<std::string> kernels{"rippler", "rippler-data-informed", "iffbs"};
};

struct RunConfig {
  ModelConfig model;
  ObservationConfig observation;
  SamplerConfig sampler;
  BenchmarkConfig benchmark;
  std::uint64_t seed = 1;
  std::string out = "out";

  /// Throws ConfigError naming the first offending key.
  void validate() const;
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);
void write_config(std::ostream& out, const RunConfig& config);

/// Names accepted by preset().
std::vector<std::string> preset_names();
/// sir-5.2 | seir-5.3 | sis-5.4 | sir-recovery-s3.2
RunConfig preset(const std::string& name);

enum class SeedPurpose : std::uint32_t { kSimulation = 1, kInference = 2, kTuner = 3 };

/// Sub-seed for one purpose: std::seed_seq over (low word, high word, purpose).
std::uint64_t derive_seed(std::uint64_t master, SeedPurpose purpose);

/// Model and observation process described by the config.
ModelSpec build_model(const ModelConfig& model, const ObservationConfig& observation);

/// The same config with the model resized to `num_states` total states
/// (exposed stages for seir, strains for multistrain).
ModelConfig with_num_states(const ModelConfig& model, int num_states);

RipplerOptions rippler_options(const SamplerConfig& sampler);

StateSpace state_space(const ModelConfig& model);

/// Simulates (X, Y) for the model and observation process with `rng`.
Dataset simulate_config_dataset(const ModelConfig& model, const ObservationConfig& observation,
                                const ModelSpec& spec, Rng& rng);

}  // namespace rippler
