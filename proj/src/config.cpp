#include "orbitcal/config.hpp"

#include "orbitcal/plot.hpp"

#define TOML_ENABLE_FORMATTERS 0
#include <toml.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace orbitcal {

namespace {

constexpr const char* kVersion = "0.1.0";

std::string where(const std::string& source, const toml::node* n) {
  if (n && n->source().begin.line > 0) {
    return source + ":" + std::to_string(n->source().begin.line);
  }
  return source;
}

// One TOML table; remembers which keys were read so leftovers can be reported.
class Section {
 public:
  Section(const toml::table* t, std::string name, const std::string& source)
      : t_(t), name_(std::move(name)), source_(source) {}

  bool present() const { return t_ != nullptr; }

  void read(const char* key, double& out) {
    if (const toml::node* n = take(key)) {
      if (const auto v = n->value<double>()) {
        out = *v;  // integers are accepted and widened
      } else {
        fail(n, key, "expected a number");
      }
    }
  }
  void read(const char* key, bool& out) {
    if (const toml::node* n = take(key)) {
      if (!n->is_boolean()) fail(n, key, "expected true or false");
      out = *n->value<bool>();
    }
  }
  void read(const char* key, std::string& out) {
    if (const toml::node* n = take(key)) {
      if (!n->is_string()) fail(n, key, "expected a string");
      out = *n->value<std::string>();
    }
  }
  template <class Int>
    requires std::is_integral_v<Int>
  void read(const char* key, Int& out) {
    if (const toml::node* n = take(key)) {
      if (!n->is_integer()) fail(n, key, "expected an integer");
      const std::int64_t v = *n->value<std::int64_t>();
      if (std::is_unsigned_v<Int> && v < 0) fail(n, key, "must not be negative");
      out = static_cast<Int>(v);
    }
  }
  void read(const char* key, std::vector<std::string>& out) {
    if (const toml::node* n = take(key)) {
      const toml::array* arr = n->as_array();
      if (!arr) fail(n, key, "expected an array of strings");
      out.clear();
      for (const auto& el : *arr) {
        if (!el.is_string()) fail(&el, key, "expected an array of strings");
        out.push_back(*el.value<std::string>());
      }
    }
  }
  /// Sub-table access for nested sections; marks the key as known.
  const toml::table* table(const char* key) {
    if (const toml::node* n = take(key)) {
      if (!n->is_table()) fail(n, key, "expected a table");
      return n->as_table();
    }
    return nullptr;
  }

  void finish() const {
    if (!t_) return;
    for (const auto& [k, v] : *t_) {
      if (!seen_.count(std::string(k.str()))) {
        throw ConfigError(where(source_, &v) + ": unknown key '" + qualified(k.str()) + "'");
      }
    }
  }

  [[noreturn]] void fail(const toml::node* n, std::string_view key, const std::string& what) const {
    throw ConfigError(where(source_, n) + ": key '" + qualified(key) + "': " + what);
  }
  template <class F>
  void check(const char* key, F&& f) const {
    try {
      f();
    } catch (const std::exception& e) {
      const toml::node* n = t_ ? t_->get(key) : nullptr;
      fail(n, key, e.what());
    }
  }

 private:
  const toml::node* take(const char* key) {
    seen_.insert(key);
    return t_ ? t_->get(key) : nullptr;
  }
  std::string qualified(std::string_view key) const {
    return name_.empty() ? std::string(key) : name_ + "." + std::string(key);
  }

  const toml::table* t_;
  std::string name_;
  const std::string& source_;
  std::set<std::string, std::less<>> seen_;
};

void read_hyperparams(Section& s, Hyperparams& hp) {
  std::visit(
      [&](auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, CmaEsParams>) {
          s.read("population_size", p.population_size);
          s.read("initial_sigma", p.initial_sigma);
        } else if constexpr (std::is_same_v<P, NelderMeadParams> ||
                             std::is_same_v<P, OnePlusOneParams>) {
          s.read("initial_sigma", p.initial_sigma);
        } else if constexpr (std::is_same_v<P, DifferentialEvolutionParams>) {
          s.read("initial_sigma", p.initial_sigma);
          s.read("population_size", p.population_size);
          s.read("crossover_rate", p.crossover_rate);
          s.read("differential_weight", p.differential_weight);
        } else if constexpr (std::is_same_v<P, SimulatedAnnealingParams>) {
          std::string schedule(to_string(p.schedule));
          s.read("schedule", schedule);
          s.check("schedule", [&] { p.schedule = cooling_schedule_from_string(schedule); });
          s.read("initial_temperature", p.initial_temperature);
          s.read("decay_rate", p.decay_rate);
          s.read("initial_sigma", p.initial_sigma);
        }
      },
      hp);
}

// TOML needs a '.' or exponent to keep a float a float.
std::string toml_float(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::string s = format_number(v);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::string toml_string(std::string_view s) {
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::size_t ToolkitConfig::effective_workers() const {
  if (workers > 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

void ToolkitConfig::validate() const {
  system.validate();
  pulse.drag.validate();
  orbit.validate();
  if (campaign.optimizers.empty()) throw std::invalid_argument("campaign: no optimizers");
  if (campaign.num_seeds < 1) throw std::invalid_argument("campaign: num_seeds must be >= 1");
  if (campaign.eval_budget < 1) throw std::invalid_argument("campaign: eval_budget must be >= 1");
  if (!(campaign.detuning_fraction >= 0.0 && campaign.detuning_fraction < 1.0)) {
    throw std::invalid_argument("campaign: detuning_fraction must lie in [0, 1)");
  }
  hyperopt.rating.validate();
  if (hyperopt.meta_budget < 1) throw std::invalid_argument("hyperopt: meta_budget must be >= 1");
  if (landscape.a_points < 1 || landscape.b_points < 1) {
    throw std::invalid_argument("landscape: grid of size 0");
  }
  for (const auto& hp : hyperparams) orbitcal::validate(hp);
}

ToolkitConfig parse_config(std::string_view text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.source().begin.line) + ": " +
                      std::string(e.description()));
  }
  ToolkitConfig cfg;
  Section top(&root, "", source);
  top.read("seed", cfg.seed);
  top.read("workers", cfg.workers);

  Section sys(top.table("system"), "system", source);
  sys.read("qubit_frequency", cfg.system.qubit_frequency);
  sys.read("anharmonicity", cfg.system.anharmonicity);
  sys.read("levels", cfg.system.levels);
  sys.read("dt", cfg.system.dt);
  sys.check("qubit_frequency", [&] { cfg.system.validate(); });
  sys.finish();

  Section pulse(top.table("pulse"), "pulse", source);
  // A changed qubit frequency moves the default carrier with it.
  cfg.pulse.drag = default_drag_params(cfg.system.qubit_frequency);
  std::string mode(to_string(cfg.pulse.mode));
  pulse.read("mode", mode);
  pulse.check("mode", [&] { cfg.pulse.mode = pulse_mode_from_string(mode); });
  pulse.read("amplitude", cfg.pulse.drag.amplitude);
  pulse.read("drag_coeff", cfg.pulse.drag.drag_coeff);
  pulse.read("drive_frequency", cfg.pulse.drag.drive_freq);
  pulse.read("phase", cfg.pulse.drag.phase);
  pulse.read("gate_time", cfg.pulse.drag.gate_time);
  pulse.read("gauss_width", cfg.pulse.drag.gauss_width);
  pulse.read("amplitude_bound", cfg.pulse.drag_bounds.amplitude_rel);
  pulse.read("drag_bound", cfg.pulse.drag_bounds.drag_coeff_rel);
  pulse.read("detuning_bound", cfg.pulse.drag_bounds.detuning_abs);
  pulse.read("pwc_inphase_bound", cfg.pulse.pwc_bounds.inphase_rel);
  pulse.read("pwc_quadrature_bound", cfg.pulse.pwc_bounds.quadrature_rel);
  pulse.check("amplitude", [&] { cfg.pulse.drag.validate(); });
  pulse.finish();

  Section orbit(top.table("orbit"), "orbit", source);
  orbit.read("num_sequences", cfg.orbit.num_sequences);
  orbit.read("sequence_length", cfg.orbit.sequence_length);
  std::string target(to_string(cfg.orbit.target));
  orbit.read("target", target);
  orbit.check("target", [&] { cfg.orbit.target = target_from_string(target); });
  orbit.read("shots", cfg.orbit.shots);
  orbit.read("sequence_seed", cfg.orbit.sequence_seed);
  orbit.read("infidelity_floor", cfg.orbit.infidelity_floor);
  orbit.read("resample_sequences", cfg.orbit.resample_sequences);
  orbit.check("num_sequences", [&] { cfg.orbit.validate(); });
  orbit.finish();

  Section camp(top.table("campaign"), "campaign", source);
  camp.read("problem", cfg.campaign.problem);
  std::vector<std::string> tags;
  for (const Algorithm a : cfg.campaign.optimizers) tags.emplace_back(to_string(a));
  camp.read("optimizers", tags);
  camp.check("optimizers", [&] {
    cfg.campaign.optimizers.clear();
    for (const auto& t : tags) cfg.campaign.optimizers.push_back(algorithm_from_string(t));
    if (cfg.campaign.optimizers.empty()) throw std::invalid_argument("empty optimizer list");
  });
  camp.read("num_seeds", cfg.campaign.num_seeds);
  camp.read("eval_budget", cfg.campaign.eval_budget);
  camp.read("detuning_fraction", cfg.campaign.detuning_fraction);
  camp.read("output_dir", cfg.campaign.output_dir);
  camp.finish();

  Section hyp(top.table("hyperopt"), "hyperopt", source);
  hyp.read("problem", cfg.hyperopt.problem);
  hyp.read("slope_weight", cfg.hyperopt.rating.slope_weight);
  hyp.read("final_weight", cfg.hyperopt.rating.final_weight);
  hyp.read("tail_length", cfg.hyperopt.rating.tail_length);
  hyp.read("num_seeds", cfg.hyperopt.rating.num_seeds);
  hyp.read("inner_budget", cfg.hyperopt.rating.inner_budget);
  hyp.read("meta_budget", cfg.hyperopt.meta_budget);
  hyp.read("base_seed", cfg.hyperopt.base_seed);
  hyp.check("tail_length", [&] { cfg.hyperopt.rating.validate(); });
  hyp.finish();

  Section land(top.table("landscape"), "landscape", source);
  land.read("param_a", cfg.landscape.param_a);
  land.read("param_b", cfg.landscape.param_b);
  land.read("a_min", cfg.landscape.a_min);
  land.read("a_max", cfg.landscape.a_max);
  land.read("b_min", cfg.landscape.b_min);
  land.read("b_max", cfg.landscape.b_max);
  land.read("a_points", cfg.landscape.a_points);
  land.read("b_points", cfg.landscape.b_points);
  land.read("num_sequences", cfg.landscape.num_sequences);
  land.read("sequence_length", cfg.landscape.sequence_length);
  land.finish();

  Section opt(top.table("optimizer"), "optimizer", source);
  for (const Algorithm a : kAllAlgorithms) {
    const std::string tag(to_string(a));
    Section s(opt.table(tag.c_str()), "optimizer." + tag, source);
    Hyperparams& hp = cfg.hyperparams[static_cast<std::size_t>(a)];
    read_hyperparams(s, hp);
    s.check("initial_sigma", [&] { orbitcal::validate(hp); });
    s.finish();
  }
  opt.finish();

  Section man(top.table("manifest"), "manifest", source);
  std::string ignored;
  std::vector<std::string> ignored_list;
  man.read("tool_version", ignored);
  man.read("command", ignored);
  man.read("run_seeds", ignored_list);
  man.finish();

  top.finish();
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

ToolkitConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string to_toml(const ToolkitConfig& cfg) {
  std::ostringstream os;
  os << "seed = " << cfg.seed << "\n";
  os << "workers = " << cfg.workers << "\n\n";
  os << "[system]\n"
     << "qubit_frequency = " << toml_float(cfg.system.qubit_frequency) << "\n"
     << "anharmonicity = " << toml_float(cfg.system.anharmonicity) << "\n"
     << "levels = " << cfg.system.levels << "\n"
     << "dt = " << toml_float(cfg.system.dt) << "\n\n";
  const auto& d = cfg.pulse.drag;
  os << "[pulse]\n"
     << "mode = " << toml_string(to_string(cfg.pulse.mode)) << "\n"
     << "amplitude = " << toml_float(d.amplitude) << "\n"
     << "drag_coeff = " << toml_float(d.drag_coeff) << "\n"
     << "drive_frequency = " << toml_float(d.drive_freq) << "\n"
     << "phase = " << toml_float(d.phase) << "\n"
     << "gate_time = " << toml_float(d.gate_time) << "\n"
     << "gauss_width = " << toml_float(d.gauss_width) << "\n"
     << "amplitude_bound = " << toml_float(cfg.pulse.drag_bounds.amplitude_rel) << "\n"
     << "drag_bound = " << toml_float(cfg.pulse.drag_bounds.drag_coeff_rel) << "\n"
     << "detuning_bound = " << toml_float(cfg.pulse.drag_bounds.detuning_abs) << "\n"
     << "pwc_inphase_bound = " << toml_float(cfg.pulse.pwc_bounds.inphase_rel) << "\n"
     << "pwc_quadrature_bound = " << toml_float(cfg.pulse.pwc_bounds.quadrature_rel) << "\n\n";
  const auto& o = cfg.orbit;
  os << "[orbit]\n"
     << "num_sequences = " << o.num_sequences << "\n"
     << "sequence_length = " << o.sequence_length << "\n"
     << "target = " << toml_string(to_string(o.target)) << "\n"
     << "shots = " << o.shots << "\n"
     << "sequence_seed = " << o.sequence_seed << "\n"
     << "infidelity_floor = " << toml_float(o.infidelity_floor) << "\n"
     << "resample_sequences = " << (o.resample_sequences ? "true" : "false") << "\n\n";
  const auto& c = cfg.campaign;
  os << "[campaign]\n"
     << "problem = " << toml_string(c.problem) << "\n"
     << "optimizers = [";
  for (std::size_t i = 0; i < c.optimizers.size(); ++i) {
    os << (i ? ", " : "") << toml_string(to_string(c.optimizers[i]));
  }
  os << "]\n"
     << "num_seeds = " << c.num_seeds << "\n"
     << "eval_budget = " << c.eval_budget << "\n"
     << "detuning_fraction = " << toml_float(c.detuning_fraction) << "\n"
     << "output_dir = " << toml_string(c.output_dir) << "\n\n";
  const auto& h = cfg.hyperopt;
  os << "[hyperopt]\n"
     << "problem = " << toml_string(h.problem) << "\n"
     << "slope_weight = " << toml_float(h.rating.slope_weight) << "\n"
     << "final_weight = " << toml_float(h.rating.final_weight) << "\n"
     << "tail_length = " << h.rating.tail_length << "\n"
     << "num_seeds = " << h.rating.num_seeds << "\n"
     << "inner_budget = " << h.rating.inner_budget << "\n"
     << "meta_budget = " << h.meta_budget << "\n"
     << "base_seed = " << h.base_seed << "\n\n";
  const auto& l = cfg.landscape;
  os << "[landscape]\n"
     << "param_a = " << toml_string(l.param_a) << "\n"
     << "param_b = " << toml_string(l.param_b) << "\n"
     << "a_min = " << toml_float(l.a_min) << "\n"
     << "a_max = " << toml_float(l.a_max) << "\n"
     << "b_min = " << toml_float(l.b_min) << "\n"
     << "b_max = " << toml_float(l.b_max) << "\n"
     << "a_points = " << l.a_points << "\n"
     << "b_points = " << l.b_points << "\n"
     << "num_sequences = " << l.num_sequences << "\n"
     << "sequence_length = " << l.sequence_length << "\n";
  for (const Algorithm a : kAllAlgorithms) {
    os << "\n[optimizer." << to_string(a) << "]\n";
    std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, CmaEsParams>) {
            os << "population_size = " << p.population_size << "\n"
               << "initial_sigma = " << toml_float(p.initial_sigma) << "\n";
          } else if constexpr (std::is_same_v<P, NelderMeadParams> ||
                               std::is_same_v<P, OnePlusOneParams>) {
            os << "initial_sigma = " << toml_float(p.initial_sigma) << "\n";
          } else if constexpr (std::is_same_v<P, DifferentialEvolutionParams>) {
            os << "initial_sigma = " << toml_float(p.initial_sigma) << "\n"
               << "population_size = " << p.population_size << "\n"
               << "crossover_rate = " << toml_float(p.crossover_rate) << "\n"
               << "differential_weight = " << toml_float(p.differential_weight) << "\n";
          } else if constexpr (std::is_same_v<P, SimulatedAnnealingParams>) {
            os << "schedule = " << toml_string(to_string(p.schedule)) << "\n"
               << "initial_temperature = " << toml_float(p.initial_temperature) << "\n"
               << "decay_rate = " << toml_float(p.decay_rate) << "\n"
               << "initial_sigma = " << toml_float(p.initial_sigma) << "\n";
          }
        },
        cfg.hyperparams_for(a));
  }
  return os.str();
}

std::string manifest_toml(const ToolkitConfig& cfg, const std::string& command,
                          const std::vector<std::uint64_t>& run_seeds) {
  std::ostringstream os;
  os << to_toml(cfg) << "\n[manifest]\n"
     << "tool_version = " << toml_string(kVersion) << "\n"
     << "command = " << toml_string(command) << "\n"
     << "run_seeds = [";
  for (std::size_t i = 0; i < run_seeds.size(); ++i) {
    os << (i ? ", " : "") << '"' << run_seeds[i] << '"';
  }
  os << "]\n";
  return os.str();
}

PulseParams nominal_pulse(const ToolkitConfig& cfg) {
  if (cfg.pulse.mode == PulseMode::Pwc) return discretize_drag(cfg.pulse.drag);
  return cfg.pulse.drag;
}

std::unique_ptr<Problem> make_problem(const ToolkitConfig& cfg, const std::string& spec) {
  if (spec == "drag" || spec == "pwc") {
    auto model = std::make_shared<PulseGateModel>(cfg.system);
    ParameterSpace space =
        spec == "drag"
            ? make_drag_space(cfg.pulse.drag, cfg.system.qubit_frequency, cfg.pulse.drag_bounds)
            : make_pwc_space(discretize_drag(cfg.pulse.drag), cfg.system.qubit_frequency,
                             cfg.pulse.pwc_bounds);
    return std::make_unique<OrbitProblem>(spec, OrbitLoss(cfg.orbit, std::move(space), model));
  }
  const std::string prefix = "analytic:";
  if (spec.rfind(prefix, 0) == 0) {
    const std::string rest = spec.substr(prefix.size());
    const auto colon = rest.find(':');
    if (colon == std::string::npos) {
      throw std::invalid_argument("analytic problem needs a dimension: analytic:<name>:<dim>");
    }
    const std::string name = rest.substr(0, colon);
    const double dim = parse_number(rest.substr(colon + 1));
    if (!(dim >= 1.0) || dim != std::floor(dim)) {
      throw std::invalid_argument("bad analytic dimension in '" + spec + "'");
    }
    return std::make_unique<AnalyticProblem>(make_analytic(name, static_cast<std::size_t>(dim)));
  }
  throw std::invalid_argument("unknown problem '" + spec + "' (drag, pwc, analytic:<name>:<dim>)");
}

std::unique_ptr<Problem> make_pulse_problem(const ToolkitConfig& cfg) {
  return make_problem(cfg, cfg.pulse.mode == PulseMode::Pwc ? "pwc" : "drag");
}

CampaignConfig campaign_config(const ToolkitConfig& cfg) {
  CampaignConfig cc;
  for (const Algorithm a : cfg.campaign.optimizers) cc.optimizers.push_back(cfg.hyperparams_for(a));
  cc.num_seeds = cfg.campaign.num_seeds;
  cc.eval_budget = cfg.campaign.eval_budget;
  cc.detuning_fraction = cfg.campaign.detuning_fraction;
  cc.seed = cfg.seed;
  cc.workers = cfg.effective_workers();
  return cc;
}

OrbitLoss landscape_loss(const ToolkitConfig& cfg) {
  OrbitConfig oc = cfg.orbit;
  oc.num_sequences = cfg.landscape.num_sequences;
  oc.sequence_length = cfg.landscape.sequence_length;
  return OrbitLoss(oc,
                   make_drag_space(cfg.pulse.drag, cfg.system.qubit_frequency, cfg.pulse.drag_bounds),
                   std::make_shared<PulseGateModel>(cfg.system));
}

std::vector<double> landscape_axis(const ParameterSpace& space, const std::string& name, double lo,
                                   double hi, std::size_t n) {
  const double nominal = space.nominal()[space.index_of(name)];
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x =
        n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    v[i] = name == "detuning" ? nominal + x : nominal * x;
  }
  return v;
}

}  // namespace orbitcal
