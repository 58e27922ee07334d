#include "pulseopt/run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "pulseopt/errors.hpp"

namespace pulseopt {

using nlohmann::json;

std::string to_string(BackendKind k) { return k == BackendKind::Sim ? "sim" : "toy"; }

BackendKind backend_from_string(const std::string& s) {
  if (s == "sim") return BackendKind::Sim;
  if (s == "toy") return BackendKind::Toy;
  throw ConfigError("unknown backend '" + s + "' (sim|toy)");
}

namespace {

// Accessor that rejects unknown keys and reports full field paths.
class Section {
 public:
  Section(json j, std::string path) : j_(std::move(j)), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config section '" + path_ + "' must be an object");
  }

  ~Section() = default;

  template <typename T>
  void get(const char* key, T& out) {
    mark(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config field '" + field(key) + "' has the wrong type");
    }
  }

  void get(const char* key, uint64_t& out) {
    mark(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_number_unsigned() && !it->is_number_integer())
      throw ConfigError("config field '" + field(key) + "' must be an integer");
    out = it->get<uint64_t>();
  }

  bool has(const char* key) const { return j_.contains(key); }

  json sub(const char* key) {
    mark(key);
    return j_.value(key, json::object());
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!known_.count(key))
        throw ConfigError("unknown config field '" + field(key.c_str()) + "'");
  }

  std::string field(const char* key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  void mark(const char* key) { known_.insert(key); }

  json j_;
  std::string path_;
  std::set<std::string, std::less<>> known_;
};

}  // namespace

GAConfig RunConfig::effective_ga() const {
  GAConfig cfg = ga;
  cfg.genes = encoding == Encoding::Gaussian ? 3 : 16;
  if (!ga_generations_explicit)
    cfg.generations = encoding == Encoding::Gaussian ? 25 : 50;
  cfg.rng_seed = seed;
  return cfg;
}

void RunConfig::validate() const {
  effective_ga().validate();
  if (!(window.start < window.end))
    throw ConfigError("decode.window_start_ns must be below decode.window_end_ns");
  if (!(sample_period > 0.0)) throw ConfigError("decode.sample_period_ns must be > 0");
  if (spline_lambda < 0.0) throw ConfigError("decode.spline_lambda must be >= 0");
  if (!(signal.fwhm > 0.0)) throw ConfigError("signal.fwhm_ns must be > 0");
  if (signal.amplitude < 0.0) throw ConfigError("signal.amplitude must be >= 0");
  for (double w : signal_fwhm_sweep)
    if (!(w > 0.0)) throw ConfigError("signal.fwhm_list_ns entries must be > 0");
  timing.validate();
  sim.validate();
  if (instrument.rise_time < 0.0)
    throw ConfigError("instrument.aom_rise_time_ns must be >= 0");
  for (double a : energy_fractions)
    if (!(a > 0.0) || a > 1.0)
      throw ConfigError("energy.alpha_list entries must be in (0, 1]");
  if (!(tap_fraction > 0.0)) throw ConfigError("fitness.tap_fraction must be > 0");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  Section root(j, "");

  std::string enc = to_string(c.encoding), bk = to_string(c.backend);
  root.get("encoding", enc);
  root.get("backend", bk);
  try {
    c.encoding = encoding_from_string(enc);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.backend = backend_from_string(bk);
  root.get("seed", c.seed);
  root.get("threads", c.threads);
  root.get("output_dir", c.output_dir);

  {
    Section ga(root.sub("ga"), "ga");
    c.ga_generations_explicit = ga.has("generations");
    ga.get("generations", c.ga.generations);
    ga.get("population_size", c.ga.population_size);
    ga.get("parents_mating", c.ga.parents_mating);
    ga.get("tournament_size", c.ga.tournament_size);
    ga.get("elitism_size", c.ga.elitism_size);
    ga.get("mutation_probability", c.ga.mutation_probability);
    ga.get("early_stop_patience", c.ga.early_stop_patience);
    ga.finish();
  }
  {
    Section d(root.sub("decode"), "decode");
    d.get("window_start_ns", c.window.start);
    d.get("window_end_ns", c.window.end);
    d.get("sample_period_ns", c.sample_period);
    d.get("spline_lambda", c.spline_lambda);
    d.finish();
  }
  {
    Section s(root.sub("signal"), "signal");
    s.get("fwhm_ns", c.signal.fwhm);
    s.get("amplitude", c.signal.amplitude);
    s.get("fwhm_list_ns", c.signal_fwhm_sweep);
    s.finish();
  }
  {
    Section t(root.sub("timing"), "timing");
    t.get("storage_time_ns", c.timing.storage_time);
    t.get("read_fwhm_ns", c.timing.read_fwhm);
    t.get("trace_start_ns", c.timing.trace_start);
    t.get("trace_end_ns", c.timing.trace_end);
    t.finish();
  }
  {
    Section s(root.sub("sim"), "sim");
    s.get("optical_depth", c.sim.optical_depth);
    s.get("gamma", c.sim.gamma);
    s.get("spin_decay", c.sim.spin_decay);
    s.get("detuning", c.sim.detuning);
    s.get("omega_max", c.sim.omega_max);
    s.get("n_z", c.sim.n_z);
    s.get("dt_int_ns", c.sim.dt);
    s.finish();
  }
  {
    Section i(root.sub("instrument"), "instrument");
    i.get("aom_rise_time_ns", c.instrument.rise_time);
    i.finish();
  }
  {
    Section e(root.sub("energy"), "energy");
    e.get("alpha_list", c.energy_fractions);
    e.finish();
  }
  {
    Section f(root.sub("fitness"), "fitness");
    f.get("tap_fraction", c.tap_fraction);
    f.finish();
  }
  root.finish();

  c.validate();
  return c;
}

json RunConfig::to_json() const {
  json j;
  j["encoding"] = to_string(encoding);
  j["backend"] = to_string(backend);
  j["seed"] = seed;
  j["threads"] = threads;
  j["output_dir"] = output_dir;

  const GAConfig eff = effective_ga();
  j["ga"] = {{"generations", eff.generations},
             {"population_size", eff.population_size},
             {"parents_mating", eff.parents_mating},
             {"tournament_size", eff.tournament_size},
             {"elitism_size", eff.elitism_size},
             {"mutation_probability", eff.mutation_probability},
             {"early_stop_patience", eff.early_stop_patience}};
  j["decode"] = {{"window_start_ns", window.start},
                 {"window_end_ns", window.end},
                 {"sample_period_ns", sample_period},
                 {"spline_lambda", spline_lambda}};
  j["signal"] = {{"fwhm_ns", signal.fwhm}, {"amplitude", signal.amplitude}};
  if (!signal_fwhm_sweep.empty()) j["signal"]["fwhm_list_ns"] = signal_fwhm_sweep;
  j["timing"] = {{"storage_time_ns", timing.storage_time},
                 {"read_fwhm_ns", timing.read_fwhm}};
  if (!std::isnan(timing.trace_start)) j["timing"]["trace_start_ns"] = timing.trace_start;
  if (!std::isnan(timing.trace_end)) j["timing"]["trace_end_ns"] = timing.trace_end;
  j["sim"] = {{"optical_depth", sim.optical_depth}, {"gamma", sim.gamma},
              {"spin_decay", sim.spin_decay},       {"detuning", sim.detuning},
              {"omega_max", sim.omega_max},         {"n_z", sim.n_z},
              {"dt_int_ns", sim.dt}};
  j["instrument"] = {{"aom_rise_time_ns", instrument.rise_time}};
  if (!energy_fractions.empty()) j["energy"] = {{"alpha_list", energy_fractions}};
  j["fitness"] = {{"tap_fraction", tap_fraction}};
  return j;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  RunConfig c = from_json(j);
  return c;
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write config file '" + path.string() + "'");
  out << to_json().dump(2) << '\n';
}

}  // namespace pulseopt
