#include "rippler/benchmark.hpp"

#include <cmath>
#include <map>

#include "rippler/diagnostics.hpp"
#include "rippler/errors.hpp"
#include "rippler/iffbs.hpp"
#include "rippler/models.hpp"
#include "rippler/rippler.hpp"
#include "rippler/rjmcmc.hpp"

namespace rippler {

std::unique_ptr<LatentKernel> make_kernel(const std::string& name, const SamplerConfig& sampler,
                                          std::optional<std::uint64_t> tuner_seed) {
  if (name == "rippler" || name == "rippler-data-informed") {
    SamplerConfig copy = sampler;
    copy.kernel = name;
    RipplerOptions options = rippler_options(copy);
    options.tuner_seed = tuner_seed;
    return std::make_unique<RipplerKernel>(options);
  }
  if (name == "iffbs") return std::make_unique<IffbsKernel>();
  if (name == "rjmcmc-sir") return std::make_unique<RjmcmcSirKernel>();
  throw ConfigError("unknown kernel '" + name + "'");
}

bool kernel_is_data_informed(const std::string& name) { return name == "rippler-data-informed"; }

std::vector<ScalingRow> scaling_benchmark(const RunConfig& config) {
  std::vector<ScalingRow> rows;
  std::map<std::string, double> baseline;  // per-update seconds at the first S of each kernel
  for (int num_states : config.benchmark.num_states) {
    const ModelConfig model_config = with_num_states(config.model, num_states);
    const ModelSpec model = build_model(model_config, config.observation);

    Rng sim_rng(derive_seed(config.seed, SeedPurpose::kSimulation) + static_cast<std::uint64_t>(num_states));
    const Dataset data = simulate_config_dataset(model_config, config.observation, model, sim_rng);

    for (const auto& name : config.benchmark.kernels) {
      if (name == "rjmcmc-sir" && model_config.kind != "sir") continue;
      Rng rng(derive_seed(config.seed, SeedPurpose::kInference) + static_cast<std::uint64_t>(num_states));
      ChainState state{model, data.y, initial_latent_state(model, data.y, kernel_is_data_informed(name), rng)};
      auto kernel = make_kernel(name, config.sampler,
                                derive_seed(config.seed, SeedPurpose::kTuner) + static_cast<std::uint64_t>(num_states));
      ChainOptions options;
      options.iterations = config.sampler.iterations;
      options.updates_per_iteration = config.sampler.updates_per_iteration;
      options.keep_records = false;
      options.keep_counts = false;
      const ChainResult result = run_chain(state, *kernel, options, rng);

      ScalingRow row;
      row.kernel = name;
      row.num_states = num_states;
      row.majd = model_config.kind == "multistrain" ? result.majd.indicator() : result.majd.ordered();
      row.seconds = result.update_seconds;
      row.updates = result.updates;
      const double per_update = result.updates > 0 ? result.update_seconds / result.updates : 0.0;
      if (!baseline.count(name)) baseline[name] = per_update;
      row.relative_time = baseline[name] > 0.0 ? per_update / baseline[name] : 1.0;
      row.majd_per_relative_time = row.relative_time > 0.0 ? row.majd / row.relative_time : 0.0;
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<std::string> oracle_kernels(bool sir_model) {
  std::vector<std::string> names{"rippler-k1", "rippler", "rippler-data-informed", "iffbs"};
  if (sir_model) names.emplace_back("rjmcmc-sir");
  return names;
}

std::vector<std::uint64_t> visit_histogram(const ChainState& start, LatentKernel& kernel, const StateSpace& space,
                                           long updates, Rng& rng) {
  const double size = std::pow(static_cast<double>(space.num_states),
                               static_cast<double>(space.num_individuals) * space.num_timepoints);
  if (size > static_cast<double>(kMaxEnumeration)) {
    throw InvariantError("oracle: S^(N*T) exceeds 1e6 configurations");
  }
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(std::llround(size)), 0);
  ChainState state = start;
  for (long k = 0; k < updates; ++k) {
    kernel.update(state, rng);
    ++counts[configuration_id(state.x, space.num_states)];
  }
  return counts;
}

std::vector<OracleRow> run_oracle(const ModelSpec& model, const Observations& y, const StateSpace& space,
                                  std::span<const double> exact, std::span<const std::string> kernels,
                                  const SamplerConfig& sampler, long updates, std::uint64_t seed) {
  std::vector<OracleRow> rows;
  std::uint64_t offset = 0;
  for (const auto& label : kernels) {
    ++offset;
    SamplerConfig config = sampler;
    std::string name = label;
    if (label == "rippler-k1") {
      name = "rippler";
      config.kappa = 1;
    }
    auto kernel = make_kernel(name, config, derive_seed(seed, SeedPurpose::kTuner) + offset);
    Rng rng(derive_seed(seed, SeedPurpose::kInference) + offset);
    const ChainState start{model, y, initial_latent_state(model, y, kernel_is_data_informed(name), rng)};
    const auto counts = visit_histogram(start, *kernel, space, updates, rng);
    rows.push_back({label, updates, total_variation(exact, counts)});
  }
  return rows;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvariantError("slope: need two or more matching points");
  double mx = 0.0;
  double my = 0.0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0 && y[k] > 0.0)) throw InvariantError("slope: values must be positive");
    mx += std::log(x[k]) / n;
    my += std::log(y[k]) / n;
  }
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = std::log(x[k]) - mx;
    sxy += dx * (std::log(y[k]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw InvariantError("slope: x values are all equal");
  return sxy / sxx;
}

}  // namespace rippler
