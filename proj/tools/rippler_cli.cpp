#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rippler/commands.hpp"
#include "rippler/config.hpp"
#include "rippler/errors.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "INI config file")->check(CLI::ExistingFile);
  cmd->add_option("--preset", flags.preset, "built-in config: sir-5.2 | seir-5.3 | sis-5.4 | sir-recovery-s3.2");
  cmd->add_option("--seed", flags.seed, "master seed (overrides the config)");
  cmd->add_option("--out", flags.out, "output directory (overrides the config)");
}

rippler::RunConfig resolve(const CommonFlags& flags) {
  if (!flags.config_path.empty() && !flags.preset.empty()) {
    throw rippler::ConfigError("--config and --preset are mutually exclusive");
  }
  rippler::RunConfig config;
  if (!flags.config_path.empty()) {
    config = rippler::load_config(flags.config_path);
  } else if (!flags.preset.empty()) {
    config = rippler::preset(flags.preset);
  }
  if (flags.seed) config.seed = *flags.seed;
  if (!flags.out.empty()) config.out = flags.out;
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-state MCMC for coupled hidden Markov epidemic models"};
  app.require_subcommand(1);

  CommonFlags sim_flags;
  auto* simulate = app.add_subcommand("simulate", "simulate X and Y from the model");
  add_common(simulate, sim_flags);

  CommonFlags infer_flags;
  std::string data_dir;
  auto* infer = app.add_subcommand("infer", "sample pi(X | theta, Y) with the configured kernel");
  add_common(infer, infer_flags);
  infer->add_option("--data", data_dir, "directory holding Y.csv (and optionally X.csv as the truth)")
      ->check(CLI::ExistingDirectory);

  CommonFlags bench_flags;
  auto* benchmark = app.add_subcommand("benchmark", "per-update time and MAJD across numbers of states");
  add_common(benchmark, bench_flags);

  CommonFlags oracle_flags;
  std::string fixture;
  long updates = 1'000'000;
  auto* oracle = app.add_subcommand("oracle", "compare kernels with the exact posterior of a tiny instance");
  add_common(oracle, oracle_flags);
  oracle->add_option("--fixture", fixture, "built-in instance: sis | sir | hmm");
  oracle->add_option("--updates", updates, "latent updates per kernel");

  CLI11_PARSE(app, argc, argv);

  try {
    std::string report;
    if (*simulate) {
      report = rippler::cmd_simulate(resolve(sim_flags));
    } else if (*infer) {
      std::optional<std::string> dir;
      if (!data_dir.empty()) dir = data_dir;
      report = rippler::cmd_infer(resolve(infer_flags), dir);
    } else if (*benchmark) {
      report = rippler::cmd_benchmark(resolve(bench_flags));
    } else if (*oracle) {
      rippler::OracleOptions options;
      if (!fixture.empty()) options.fixture = fixture;
      options.updates = updates;
      report = rippler::cmd_oracle(resolve(oracle_flags), options);
    }
    std::cout << report << '\n';
    return 0;
  } catch (const rippler::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const rippler::DomainError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const rippler::InvariantError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 3;
  } catch (const rippler::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
