#include "rippler/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "rippler/errors.hpp"

namespace rippler {

namespace pt = boost::property_tree;

int ModelConfig::num_states() const {
  if (kind == "sir") return 3;
  if (kind == "seir") return exposed_steps + 3;
  if (kind == "multistrain") return strains + 1;
  throw ConfigError("model.kind: unknown model '" + kind + "'");
}

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"model",
       {"kind", "individuals", "timepoints", "beta", "gamma", "exposed_steps", "sigma", "strains", "strain_beta",
        "strain_gamma", "delta", "initial_infectives"}},
      {"observation", {"mode", "sensitivity", "specificity", "test_probability"}},
      {"sampler",
       {"kernel", "iterations", "updates_per_iteration", "epsilon", "kappa_max", "target_acceptance", "kappa",
        "burn_in", "level", "theta_update", "random_walk_scale"}},
      {"benchmark", {"num_states", "kernels"}},
      {"run", {"seed", "out"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return "";
  return s.substr(first, s.find_last_not_of(" \t") - first + 1);
}

// Accepts plain numbers and simple fractions such as 1/80.
double parse_real(const std::string& key, const std::string& text) {
  const std::string value = trim(text);
  try {
    std::size_t used = 0;
    const auto slash = value.find('/');
    if (slash == std::string::npos) {
      const double v = std::stod(value, &used);
      if (used == value.size()) return v;
    } else {
      const std::string num = trim(value.substr(0, slash));
      const std::string den = trim(value.substr(slash + 1));
      std::size_t used_den = 0;
      const double a = std::stod(num, &used);
      const double b = std::stod(den, &used_den);
      if (used == num.size() && used_den == den.size() && b != 0.0) return a / b;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + value + "'");
}

long long parse_integer(const std::string& key, const std::string& text) {
  const std::string value = trim(text);
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected an integer, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  void real(const std::string& path, double& out) const {
    if (auto v = tree_.get_optional<std::string>(path)) out = parse_real(path, *v);
  }
  void integer(const std::string& path, int& out) const {
    if (auto v = tree_.get_optional<std::string>(path)) out = static_cast<int>(parse_integer(path, *v));
  }
  void text(const std::string& path, std::string& out) const {
    if (auto v = tree_.get_optional<std::string>(path)) out = trim(*v);
  }
  void seed(const std::string& path, std::uint64_t& out) const {
    if (auto v = tree_.get_optional<std::string>(path)) {
      const long long parsed = parse_integer(path, *v);
      if (parsed < 0) throw ConfigError(path + ": seed must be non-negative");
      out = static_cast<std::uint64_t>(parsed);
    }
  }

 private:
  const pt::ptree& tree_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

bool is_probability(double v) { return v >= 0.0 && v <= 1.0; }

std::vector<int> fixed_initial_states(int num_individuals, const std::vector<int>& infective_states,
                                      int per_state) {
  std::vector<int> states(num_individuals, 0);
  int j = 0;
  for (int s : infective_states) {
    for (int k = 0; k < per_state; ++k) states.at(j++) = s;
  }
  return states;
}

}  // namespace

void RunConfig::validate() const {
  const auto& m = model;
  require(m.kind == "sir" || m.kind == "seir" || m.kind == "multistrain",
          "model.kind: expected sir, seir or multistrain, got '" + m.kind + "'");
  require(m.num_individuals >= 1, "model.individuals: must be >= 1");
  require(m.num_timepoints >= 2, "model.timepoints: must be >= 2");
  require(m.beta >= 0.0 && m.gamma >= 0.0, "model.beta / model.gamma: rates must be non-negative");
  require(m.exposed_steps >= 1, "model.exposed_steps: must be >= 1");
  require(m.sigma >= 0.0, "model.sigma: must be non-negative");
  require(m.strains >= 1, "model.strains: must be >= 1");
  require(m.strain_beta >= 0.0 && m.strain_gamma >= 0.0, "model.strain_beta / model.strain_gamma: must be >= 0");
  require(is_probability(m.delta), "model.delta: must lie in [0, 1]");
  require(m.initial_infectives >= 0, "model.initial_infectives: must be >= 0");
  const int seeded = m.kind == "multistrain" ? m.initial_infectives * m.strains : m.initial_infectives;
  require(seeded <= m.num_individuals, "model.initial_infectives: more initial infectives than individuals");

  const auto& o = observation;
  require(o.mode == "test" || o.mode == "recovery", "observation.mode: expected test or recovery");
  require(o.mode == "test" || m.kind == "sir", "observation.mode: recovery times need the sir model");
  require(is_probability(o.sensitivity), "observation.sensitivity: must lie in [0, 1]");
  require(is_probability(o.specificity), "observation.specificity: must lie in [0, 1]");
  require(is_probability(o.test_probability), "observation.test_probability: must lie in [0, 1]");

  const auto& s = sampler;
  require(s.kernel == "rippler" || s.kernel == "rippler-data-informed" || s.kernel == "iffbs" ||
              s.kernel == "rjmcmc-sir",
          "sampler.kernel: expected rippler, rippler-data-informed, iffbs or rjmcmc-sir, got '" + s.kernel + "'");
  require(s.kernel != "rjmcmc-sir" || m.kind == "sir", "sampler.kernel: rjmcmc-sir needs the sir model");
  require(s.iterations >= 0, "sampler.iterations: must be >= 0");
  require(s.updates_per_iteration >= 0, "sampler.updates_per_iteration: must be >= 0");
  require(is_probability(s.epsilon), "sampler.epsilon: must lie in [0, 1]");
  require(s.kappa_max >= 1, "sampler.kappa_max: must be >= 1");
  require(s.target_acceptance > 0.0 && s.target_acceptance < 1.0, "sampler.target_acceptance: must lie in (0, 1)");
  require(s.kappa >= 0, "sampler.kappa: must be >= 0");
  require(s.burn_in >= 0.0 && s.burn_in < 1.0, "sampler.burn_in: must lie in [0, 1)");
  require(is_probability(s.level), "sampler.level: must lie in [0, 1]");
  require(s.theta_update == "fixed" || s.theta_update == "random-walk",
          "sampler.theta_update: expected fixed or random-walk");
  require(s.random_walk_scale > 0.0, "sampler.random_walk_scale: must be positive");

  require(!benchmark.num_states.empty(), "benchmark.num_states: must list at least one size");
  for (int size : benchmark.num_states) {
    require(size >= 2, "benchmark.num_states: sizes must be >= 2");
    if (m.kind == "seir") require(size >= 4, "benchmark.num_states: seir needs at least 4 states");
  }
  for (const auto& k : benchmark.kernels) {
    require(k == "rippler" || k == "rippler-data-informed" || k == "iffbs" || k == "rjmcmc-sir",
            "benchmark.kernels: unknown kernel '" + k + "'");
  }
}

RunConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto known = known_keys().find(section);
    if (known == known_keys().end()) throw ConfigError("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      if (!known->second.count(key)) throw ConfigError("config: unknown key " + section + "." + key);
    }
  }

  RunConfig c;
  const Reader r(tree);
  r.text("model.kind", c.model.kind);
  r.integer("model.individuals", c.model.num_individuals);
  r.integer("model.timepoints", c.model.num_timepoints);
  r.real("model.beta", c.model.beta);
  r.real("model.gamma", c.model.gamma);
  r.integer("model.exposed_steps", c.model.exposed_steps);
  r.real("model.sigma", c.model.sigma);
  r.integer("model.strains", c.model.strains);
  r.real("model.strain_beta", c.model.strain_beta);
  r.real("model.strain_gamma", c.model.strain_gamma);
  r.real("model.delta", c.model.delta);
  r.integer("model.initial_infectives", c.model.initial_infectives);

  r.text("observation.mode", c.observation.mode);
  r.real("observation.sensitivity", c.observation.sensitivity);
  r.real("observation.specificity", c.observation.specificity);
  r.real("observation.test_probability", c.observation.test_probability);

  r.text("sampler.kernel", c.sampler.kernel);
  r.integer("sampler.iterations", c.sampler.iterations);
  r.integer("sampler.updates_per_iteration", c.sampler.updates_per_iteration);
  r.real("sampler.epsilon", c.sampler.epsilon);
  r.integer("sampler.kappa_max", c.sampler.kappa_max);
  r.real("sampler.target_acceptance", c.sampler.target_acceptance);
  r.integer("sampler.kappa", c.sampler.kappa);
  r.real("sampler.burn_in", c.sampler.burn_in);
  r.real("sampler.level", c.sampler.level);
  r.text("sampler.theta_update", c.sampler.theta_update);
  r.real("sampler.random_walk_scale", c.sampler.random_walk_scale);

  if (auto v = tree.get_optional<std::string>("benchmark.num_states")) {
    c.benchmark.num_states.clear();
    for (const auto& item : split_list(*v)) {
      c.benchmark.num_states.push_back(static_cast<int>(parse_integer("benchmark.num_states", item)));
    }
  }
  if (auto v = tree.get_optional<std::string>("benchmark.kernels")) c.benchmark.kernels = split_list(*v);

  r.seed("run.seed", c.seed);
  r.text("run.out", c.out);
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  return parse_config(in);
}

void write_config(std::ostream& out, const RunConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "[model]\n"
     << "kind = " << c.model.kind << "\n"
     << "individuals = " << c.model.num_individuals << "\n"
     << "timepoints = " << c.model.num_timepoints << "\n"
     << "beta = " << c.model.beta << "\n"
     << "gamma = " << c.model.gamma << "\n"
     << "exposed_steps = " << c.model.exposed_steps << "\n"
     << "sigma = " << c.model.sigma << "\n"
     << "strains = " << c.model.strains << "\n"
     << "strain_beta = " << c.model.strain_beta << "\n"
     << "strain_gamma = " << c.model.strain_gamma << "\n"
     << "delta = " << c.model.delta << "\n"
     << "initial_infectives = " << c.model.initial_infectives << "\n\n"
     << "[observation]\n"
     << "mode = " << c.observation.mode << "\n"
     << "sensitivity = " << c.observation.sensitivity << "\n"
     << "specificity = " << c.observation.specificity << "\n"
     << "test_probability = " << c.observation.test_probability << "\n\n"
     << "[sampler]\n"
     << "kernel = " << c.sampler.kernel << "\n"
     << "iterations = " << c.sampler.iterations << "\n"
     << "updates_per_iteration = " << c.sampler.updates_per_iteration << "\n"
     << "epsilon = " << c.sampler.epsilon << "\n"
     << "kappa_max = " << c.sampler.kappa_max << "\n"
     << "target_acceptance = " << c.sampler.target_acceptance << "\n"
     << "kappa = " << c.sampler.kappa << "\n"
     << "burn_in = " << c.sampler.burn_in << "\n"
     << "level = " << c.sampler.level << "\n"
     << "theta_update = " << c.sampler.theta_update << "\n"
     << "random_walk_scale = " << c.sampler.random_walk_scale << "\n\n"
     << "[benchmark]\n"
     << "num_states = ";
  for (std::size_t k = 0; k < c.benchmark.num_states.size(); ++k) {
    os << (k ? ", " : "") << c.benchmark.num_states[k];
  }
  os << "\nkernels = ";
  for (std::size_t k = 0; k < c.benchmark.kernels.size(); ++k) {
    os << (k ? ", " : "") << c.benchmark.kernels[k];
  }
  os << "\n\n[run]\n"
     << "seed = " << c.seed << "\n"
     << "out = " << c.out << "\n";
  out << os.str();
}

std::vector<std::string> preset_names() { return {"sir-5.2", "seir-5.3", "sis-5.4", "sir-recovery-s3.2"}; }

RunConfig preset(const std::string& name) {
  RunConfig c;
  if (name == "sir-5.2") {
    c.out = "out/sir";
  } else if (name == "sir-recovery-s3.2") {
    c.observation.mode = "recovery";
    c.sampler.kernel = "rippler-data-informed";
    c.out = "out/sir-recovery";
  } else if (name == "seir-5.3") {
    c.model.kind = "seir";
    c.model.num_individuals = 100;
    c.model.num_timepoints = 100;
    c.model.beta = 1.0 / 50.0;
    c.model.gamma = 1.0 / 20.0;
    c.model.exposed_steps = 3;
    c.observation.sensitivity = 0.8;
    c.observation.specificity = 0.95;
    c.sampler.iterations = 1000;
    c.benchmark.num_states = {4, 5, 6, 7, 8, 9, 10};
    c.out = "out/seir";
  } else if (name == "sis-5.4") {
    c.model.kind = "multistrain";
    c.model.num_individuals = 40;
    c.model.num_timepoints = 50;
    c.model.strains = 3;
    c.observation.sensitivity = 0.8;
    c.observation.specificity = 0.95;
    c.sampler.iterations = 1000;
    c.benchmark.num_states = {4, 5, 6, 7, 8, 9, 10};
    c.out = "out/sis";
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  c.validate();
  return c;
}

std::uint64_t derive_seed(std::uint64_t master, SeedPurpose purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(master & 0xffffffffu), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(purpose)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[1]) << 32) | words[0];
}

ModelSpec build_model(const ModelConfig& m, const ObservationConfig& o) {
  const int num_states = m.num_states();
  std::shared_ptr<const Dynamics> dynamics;
  std::vector<int> test_targets;
  if (m.kind == "sir") {
    dynamics = std::make_shared<SirDynamics>(
        SirParams{m.beta, m.gamma},
        InitialCondition::fixed(fixed_initial_states(m.num_individuals, {sir::kInfective}, m.initial_infectives),
                                num_states));
    test_targets = {sir::kInfective};
  } else if (m.kind == "seir") {
    SeirParams params;
    params.exposed_steps = m.exposed_steps;
    params.beta = m.beta;
    params.gamma = m.gamma;
    params.sigmas.assign(m.exposed_steps, m.sigma > 0.0 ? m.sigma : m.exposed_steps / 10.0);
    const int infective = params.infective_state();
    dynamics = std::make_shared<SeirDynamics>(
        params, InitialCondition::fixed(fixed_initial_states(m.num_individuals, {infective}, m.initial_infectives),
                                        num_states));
    test_targets = {infective};
  } else {
    MultiStrainParams params;
    params.strains = m.strains;
    params.betas.assign(m.strains, m.strain_beta);
    params.gammas.assign(m.strains, m.strain_gamma);
    params.delta = m.delta;
    std::vector<int> strains(m.strains);
    for (int i = 0; i < m.strains; ++i) strains[i] = i + 1;
    dynamics = std::make_shared<MultiStrainDynamics>(
        params,
        InitialCondition::fixed(fixed_initial_states(m.num_individuals, strains, m.initial_infectives), num_states));
    test_targets = strains;
  }

  std::shared_ptr<const Emission> emission;
  if (o.mode == "recovery") {
    emission = std::make_shared<RecoveryObservation>(sir::kSusceptible, sir::kInfective, sir::kRecovered);
  } else {
    emission = std::make_shared<DiagnosticTest>(o.sensitivity, o.specificity, test_targets, num_states,
                                                o.test_probability);
  }
  return {dynamics, emission};
}

ModelConfig with_num_states(const ModelConfig& model, int num_states) {
  ModelConfig out = model;
  if (model.kind == "seir") {
    out.exposed_steps = num_states - 3;
    out.sigma = 0.0;
  } else if (model.kind == "multistrain") {
    out.strains = num_states - 1;
  } else if (num_states != 3) {
    throw ConfigError("model.kind: sir has exactly 3 states");
  }
  return out;
}

RipplerOptions rippler_options(const SamplerConfig& sampler) {
  RipplerOptions options;
  options.data_informed = sampler.kernel == "rippler-data-informed";
  options.epsilon = sampler.epsilon;
  options.kappa_max = sampler.kappa_max;
  options.target_acceptance = sampler.target_acceptance;
  options.fixed_kappa = sampler.kappa;
  return options;
}

StateSpace state_space(const ModelConfig& model) {
  return {model.num_states(), model.num_individuals, model.num_timepoints};
}

Dataset simulate_config_dataset(const ModelConfig& model, const ObservationConfig& observation,
                                const ModelSpec& spec, Rng& rng) {
  const StateSpace space = state_space(model);
  if (observation.mode == "recovery") {
    return simulate_recovery_dataset(*spec.dynamics, space, sir::kInfective, sir::kRecovered, rng);
  }
  return simulate_dataset(*spec.dynamics, space, dynamic_cast<const DiagnosticTest&>(*spec.emission), rng);
}

}  // namespace rippler
