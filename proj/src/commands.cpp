#include "rippler/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "json.hpp"
#include "rippler/benchmark.hpp"
#include "rippler/csv_io.hpp"
#include "rippler/diagnostics.hpp"
#include "rippler/errors.hpp"
#include "rippler/fixtures.hpp"
#include "rippler/models.hpp"
#include "rippler/theta.hpp"

namespace rippler {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << std::setprecision(10);
  return out;
}

fs::path prepare_out(const RunConfig& config) {
  fs::path dir(config.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

ordered_json manifest(const RunConfig& config, const std::string& command) {
  ordered_json m;
  m["command"] = command;
  m["config_hash"] = hex(config_hash(config));
  m["seed"] = config.seed;
  m["simulation_seed"] = derive_seed(config.seed, SeedPurpose::kSimulation);
  m["inference_seed"] = derive_seed(config.seed, SeedPurpose::kInference);
  m["tuner_seed"] = derive_seed(config.seed, SeedPurpose::kTuner);
  return m;
}

void write_json(const fs::path& path, const ordered_json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

void write_config_file(const fs::path& path, const RunConfig& config) {
  auto out = open_output(path);
  write_config(out, config);
}

Dataset simulate(const RunConfig& config, const ModelSpec& model) {
  Rng rng(derive_seed(config.seed, SeedPurpose::kSimulation));
  return simulate_config_dataset(config.model, config.observation, model, rng);
}

void write_dataset(const fs::path& dir, const Dataset& data) {
  auto x = open_output(dir / "X.csv");
  write_states(x, data.x);
  auto y = open_output(dir / "Y.csv");
  write_observations(y, data.y);
}

bool is_rippler(const std::string& kernel) { return kernel == "rippler" || kernel == "rippler-data-informed"; }

}  // namespace

std::uint64_t config_hash(const RunConfig& config) {
  std::ostringstream os;
  write_config(os, config);
  std::string text = os.str();
  text = text.substr(0, text.find("[run]"));
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string cmd_simulate(const RunConfig& config) {
  config.validate();
  const ModelSpec model = build_model(config.model, config.observation);
  const Dataset data = simulate(config, model);
  const fs::path dir = prepare_out(config);
  write_dataset(dir, data);
  write_config_file(dir / "config.ini", config);
  ordered_json m = manifest(config, "simulate");
  m["num_states"] = config.model.num_states();
  m["num_individuals"] = config.model.num_individuals;
  m["num_timepoints"] = config.model.num_timepoints;
  long observed = 0;
  for (const auto& v : data.y.values()) observed += v.has_value();
  m["observed_cells"] = observed;
  write_json(dir / "manifest.json", m);
  return "simulated " + std::to_string(config.model.num_timepoints) + "x" +
         std::to_string(config.model.num_individuals) + " dataset (" + std::to_string(observed) +
         " observed cells) into " + dir.string();
}

std::string cmd_infer(const RunConfig& config, const std::optional<std::string>& data_dir) {
  config.validate();
  const ModelSpec model = build_model(config.model, config.observation);
  const StateSpace space = state_space(config.model);
  const fs::path dir = prepare_out(config);

  Observations y;
  std::optional<HiddenStates> truth;
  if (data_dir) {
    const fs::path in(*data_dir);
    y = read_observations_file((in / "Y.csv").string());
    if (fs::exists(in / "X.csv")) truth = read_states_file((in / "X.csv").string());
  } else {
    Dataset data = simulate(config, model);
    write_dataset(dir, data);
    y = std::move(data.y);
    truth = std::move(data.x);
  }
  if (y.num_timepoints() != space.num_timepoints || y.num_individuals() != space.num_individuals) {
    throw ConfigError("data: Y.csv is " + std::to_string(y.num_timepoints()) + "x" +
                      std::to_string(y.num_individuals()) + " but the config describes " +
                      std::to_string(space.num_timepoints) + "x" + std::to_string(space.num_individuals));
  }
  if (truth) {
    check_states(*truth, space.num_states);
    check_observations(y, *truth, *model.emission);
  }

  const SamplerConfig& sampler = config.sampler;
  Rng rng(derive_seed(config.seed, SeedPurpose::kInference));
  auto kernel = make_kernel(sampler.kernel, sampler, derive_seed(config.seed, SeedPurpose::kTuner));
  ChainState state{model, y, initial_latent_state(model, y, kernel_is_data_informed(sampler.kernel), rng)};

  ParameterUpdate theta;
  std::ofstream theta_out;
  ChainOptions options;
  options.iterations = sampler.iterations;
  options.updates_per_iteration = sampler.updates_per_iteration;
  if (sampler.theta_update == "random-walk") {
    theta = sir_random_walk(sampler.random_walk_scale);
    theta_out = open_output(dir / "theta.csv");
    theta_out << "iteration,beta,gamma\n";
    options.observer = [&theta_out](int k, const ChainState& s) {
      const auto& p = dynamic_cast<const SirDynamics&>(*s.model.dynamics).params();
      theta_out << k << ',' << p.beta << ',' << p.gamma << '\n';
    };
  }
  const ChainResult result = run_chain(state, *kernel, options, rng, theta);

  const bool kappa_column = is_rippler(sampler.kernel);
  {
    auto out = open_output(dir / "trace.csv");
    out << "iteration,update,kappa,proposed,accepted,exploit,ripple_size,log_ratio\n";
    const int per = std::max(1, sampler.updates_per_iteration);
    for (std::size_t i = 0; i < result.records.size(); ++i) {
      const auto& r = result.records[i];
      out << i / per + 1 << ',' << i % per + 1 << ',';
      if (kappa_column) out << r.kappa;
      out << ',' << r.proposed << ',' << r.accepted << ',' << r.exploit << ',' << r.ripple_size << ','
          << r.log_ratio << '\n';
    }
  }
  {
    auto out = open_output(dir / "state_counts.csv");
    out << "iteration,t,state,count\n";
    const auto& c = result.counts;
    for (int k = 0; k < c.iterations(); ++k) {
      for (int t = 0; t < c.num_timepoints(); ++t) {
        for (int s = 0; s < c.num_states(); ++s) out << k + 1 << ',' << t + 1 << ',' << s + 1 << ',' << c.count(k, t, s) << '\n';
      }
    }
  }
  const int iterations = result.counts.iterations();
  const bool summarise = iterations - static_cast<int>(std::floor(sampler.burn_in * iterations)) >= 1;
  const auto intervals = summarise ? credible_intervals(result.counts, sampler.level, sampler.burn_in)
                                   : std::vector<IntervalSummary>{};
  {
    auto out = open_output(dir / "intervals.csv");
    out << "t,state,median,lo,hi\n";
    for (const auto& iv : intervals) {
      out << iv.t + 1 << ',' << iv.state + 1 << ',' << iv.median << ',' << iv.lower << ',' << iv.upper << '\n';
    }
  }
  {
    auto out = open_output(dir / "majd.csv");
    out << "kernel,S,metric,majd,seconds,relative_time\n";
    out << sampler.kernel << ',' << space.num_states << ",ordered," << result.majd.ordered() << ','
        << result.update_seconds << ",1\n";
    out << sampler.kernel << ',' << space.num_states << ",indicator," << result.majd.indicator() << ','
        << result.update_seconds << ",1\n";
  }

  struct Tally {
    long proposed = 0;
    long accepted = 0;
    long exploit_proposed = 0;
    long exploit_accepted = 0;
  };
  std::map<int, Tally> by_kappa;
  std::map<int, Tally> by_ripple;
  Tally all;
  for (const auto& r : result.records) {
    if (!r.proposed) continue;
    for (Tally* t : {&by_kappa[r.kappa], &by_ripple[r.ripple_size], &all}) {
      ++t->proposed;
      t->accepted += r.accepted;
      t->exploit_proposed += r.exploit;
      t->exploit_accepted += r.exploit && r.accepted;
    }
  }
  auto rate = [](long a, long p) { return p > 0 ? static_cast<double>(a) / p : 0.0; };
  {
    auto out = open_output(dir / "acceptance_by_kappa.csv");
    out << "kappa,proposed,accepted,rate,exploit_proposed,exploit_accepted\n";
    for (const auto& [k, t] : by_kappa) {
      out << k << ',' << t.proposed << ',' << t.accepted << ',' << rate(t.accepted, t.proposed) << ','
          << t.exploit_proposed << ',' << t.exploit_accepted << '\n';
    }
  }
  {
    auto out = open_output(dir / "ripple_sizes.csv");
    out << "ripple_size,proposed,accepted\n";
    for (const auto& [size, t] : by_ripple) out << size << ',' << t.proposed << ',' << t.accepted << '\n';
  }

  ordered_json summary;
  summary["kernel"] = sampler.kernel;
  summary["iterations"] = sampler.iterations;
  summary["updates"] = result.updates;
  summary["update_seconds"] = result.update_seconds;
  summary["acceptance_rate"] = rate(all.accepted, all.proposed);
  summary["exploit_acceptance_rate"] = rate(all.exploit_accepted, all.exploit_proposed);
  summary["majd_ordered"] = result.majd.ordered();
  summary["majd_indicator"] = result.majd.indicator();
  summary["coverage"] = truth && summarise
                            ? ordered_json(interval_coverage(intervals, *truth, space.num_states))
                            : ordered_json();
  write_json(dir / "summary.json", summary);
  ordered_json m = manifest(config, "infer");
  m["data"] = data_dir ? ordered_json(*data_dir) : ordered_json("simulated");
  write_json(dir / "manifest.json", m);
  write_config_file(dir / "config.ini", config);

  std::ostringstream report;
  report << sampler.kernel << ": " << result.updates << " updates, acceptance " << rate(all.accepted, all.proposed)
         << ", MAJD " << result.majd.ordered() << " (ordered) " << result.majd.indicator() << " (indicator)";
  if (truth && summarise) {
    report << ", coverage " << interval_coverage(intervals, *truth, space.num_states);
  }
  return report.str();
}

std::string cmd_benchmark(const RunConfig& config) {
  config.validate();
  const fs::path dir = prepare_out(config);
  const auto rows = scaling_benchmark(config);
  {
    auto out = open_output(dir / "scaling.csv");
    out << "kernel,S,majd,seconds,updates,relative_time,majd_per_relative_time\n";
    for (const auto& r : rows) {
      out << r.kernel << ',' << r.num_states << ',' << r.majd << ',' << r.seconds << ',' << r.updates << ','
          << r.relative_time << ',' << r.majd_per_relative_time << '\n';
    }
  }
  std::ostringstream report;
  auto out = open_output(dir / "slopes.csv");
  out << "kernel,slope\n";
  for (const auto& name : config.benchmark.kernels) {
    std::vector<double> s;
    std::vector<double> time;
    for (const auto& r : rows) {
      if (r.kernel != name || r.updates == 0) continue;
      s.push_back(r.num_states);
      time.push_back(r.seconds / static_cast<double>(r.updates));
    }
    if (s.size() < 2) continue;
    const double slope = loglog_slope(s, time);
    out << name << ',' << slope << '\n';
    report << name << " log-log slope " << slope << '\n';
  }
  write_config_file(dir / "config.ini", config);
  write_json(dir / "manifest.json", manifest(config, "benchmark"));
  report << rows.size() << " rows written to " << (dir / "scaling.csv").string();
  return report.str();
}

std::string cmd_oracle(const RunConfig& config, const OracleOptions& options) {
  config.validate();
  if (options.updates < 1) throw ConfigError("oracle: updates must be at least 1");
  ModelSpec model;
  Observations y;
  StateSpace space;
  std::string source;
  if (options.fixture) {
    Fixture f = fixture_by_name(*options.fixture);
    model = f.model;
    y = std::move(f.y);
    space = f.space;
    source = "fixture " + f.name;
  } else {
    space = state_space(config.model);
    const double size = std::pow(static_cast<double>(space.num_states),
                                 static_cast<double>(space.num_individuals) * space.num_timepoints);
    if (size > static_cast<double>(kMaxEnumeration)) {
      throw ConfigError("oracle: S^(N*T) = " + std::to_string(space.num_states) + "^" +
                        std::to_string(space.num_individuals * space.num_timepoints) +
                        " exceeds the 1e6 enumeration limit; shrink the model");
    }
    model = build_model(config.model, config.observation);
    y = simulate(config, model).y;
    source = "config model";
  }
  const fs::path dir = prepare_out(config);
  const EnumeratedPosterior exact = enumerate_posterior(model, y, space);
  {
    auto out = open_output(dir / "enumeration.csv");
    out << std::setprecision(17) << "config_id,probability\n";
    for (std::size_t id = 0; id < exact.probability.size(); ++id) out << id << ',' << exact.probability[id] << '\n';
  }
  const bool sir_model = dynamic_cast<const SirDynamics*>(model.dynamics.get()) != nullptr;
  const auto kernels = oracle_kernels(sir_model);
  const auto rows = run_oracle(model, y, space, exact.probability, kernels, config.sampler, options.updates, config.seed);
  std::ostringstream report;
  report << source << ", " << exact.probability.size() << " configurations\n";
  auto out = open_output(dir / "oracle.csv");
  out << "kernel,updates,tv\n";
  for (const auto& r : rows) {
    out << r.kernel << ',' << r.updates << ',' << r.tv << '\n';
    report << r.kernel << " TV " << r.tv << '\n';
  }
  write_json(dir / "manifest.json", manifest(config, "oracle"));
  return report.str();
}

}  // namespace rippler
