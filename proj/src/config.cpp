#include "lrc/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "lrc/error.hpp"
#include "lrc/seeding.hpp"

namespace lrc {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"signals",
       {"u_omegas", "u_amplitudes", "u_phases", "y_omegas", "y_amplitudes", "y_phases", "u_file",
        "y_file", "n_frequencies", "steps", "tau", "washout"}},
      {"reservoir",
       {"n", "edge_prob", "weighted", "target_max_eig", "topology_file", "activation",
        "spectral_radius", "input_scale", "readout_beta"}},
      {"optimizer",
       {"n_modes", "beta1", "beta2", "gamma", "restarts", "lambda_init_low", "lambda_init_high",
        "constraint_margin", "max_inner_iters", "grad_tol", "seed", "frequency_weighting"}},
      {"benchmark",
       {"mode", "fixed_value", "sweep_values", "trials", "methods", "omega_low", "omega_high",
        "grid_points", "min_separation", "amp_low", "amp_high", "epsilons", "sensitivity_trials",
        "beta1_values", "beta2_values", "beta_trials", "theorem_instances", "theorem_n_min",
        "theorem_n_max", "theorem_k_max", "theorem2_beta", "corrupt_basis"}},
  };
  return keys;
}

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::logic_error&) {
    fail(key + ": expected a number, got '" + text + "'");
  }
  if (used != t.size()) fail(key + ": expected a number, got '" + text + "'");
  return v;
}

long long to_integer(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(t, &used);
  } catch (const std::logic_error&) {
    fail(key + ": expected an integer, got '" + text + "'");
  }
  if (used != t.size()) fail(key + ": expected an integer, got '" + text + "'");
  return v;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t.empty() || t[0] == '-') fail(key + ": expected a non-negative integer");
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(t, &used);
  } catch (const std::logic_error&) {
    fail(key + ": expected a non-negative integer, got '" + text + "'");
  }
  if (used != t.size()) fail(key + ": expected a non-negative integer, got '" + text + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  fail(key + ": expected a boolean, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  const std::string t = trim(text);
  if (t.empty()) return out;
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(to_double(key, item));
  return out;
}

std::vector<int> to_ints(const std::string& key, const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split_list(text)) out.push_back(static_cast<int>(to_integer(key, item)));
  return out;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return *v;
  }

  template <class T, class Parse>
  void read(const std::string& section, const std::string& key, T& target, Parse parse) const {
    if (auto v = raw(section, key)) target = parse(section + "." + key, *v);
  }

 private:
  const pt::ptree& tree_;
};

MultiSineSignal build_signal(const std::string& prefix, const std::vector<double>& omegas,
                             const std::vector<double>& amps, const std::vector<double>& phases) {
  if (omegas.size() != amps.size()) {
    fail("signals." + prefix + ": omegas and amplitudes differ in length");
  }
  if (!phases.empty() && phases.size() != omegas.size()) {
    fail("signals." + prefix + ": phases and omegas differ in length");
  }
  std::vector<SineComponent> comps;
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    comps.push_back({omegas[i], amps[i], phases.empty() ? 0.0 : phases[i]});
  }
  try {
    return MultiSineSignal(std::move(comps));
  } catch (const Error& e) {
    fail("signals." + prefix + ": " + e.what());
  }
}

void apply_override(pt::ptree& tree, const std::string& entry) {
  const auto eq = entry.find('=');
  if (eq == std::string::npos) fail("override '" + entry + "' is not of the form section.key=value");
  const std::string path = trim(entry.substr(0, eq));
  const auto dot = path.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == path.size()) {
    fail("override '" + entry + "' needs a section.key name");
  }
  tree.put(pt::ptree::path_type(path, '.'), trim(entry.substr(eq + 1)));
}

}  // namespace

MultiSineSignal default_input_signal() {
  return MultiSineSignal({{1.0, 1.1, 0.0}, {3.0, 1.7, 0.0}, {5.0, 2.1, 0.0}});
}

MultiSineSignal default_output_signal() {
  return MultiSineSignal({{1.0, 2.2, -0.5}, {3.0, 1.0, 0.9}, {5.0, 1.6, 1.1}});
}

std::string RunConfig::hash() const {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical)));
  return buf;
}

PipelineConfig RunConfig::pipeline() const {
  PipelineConfig p;
  p.window = signals.window;
  p.readout_beta = reservoir.readout_beta;
  p.edge_prob = reservoir.edge_prob;
  p.weighted = reservoir.weighted;
  p.target_max_eig = reservoir.target_max_eig;
  p.spectral_radius = reservoir.spectral_radius;
  p.input_scale = reservoir.input_scale;
  p.optimizer = optimizer;
  return p;
}

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(std::string("cannot parse config: ") + e.what());
  }
  for (const auto& o : overrides) apply_override(tree, o);

  std::ostringstream canon;
  for (const auto& [section, body] : tree) {
    const auto known = known_keys().find(section);
    if (known == known_keys().end()) fail("unknown config section [" + section + "]");
    if (!body.data().empty()) fail("section [" + section + "] cannot carry a value");
    for (const auto& [key, value] : body) {
      if (!known->second.count(key)) fail("unknown key " + section + "." + key);
      if (!value.empty()) fail(section + "." + key + " is nested");
    }
  }
  for (const auto& [section, keys] : known_keys()) {
    const auto sec = tree.get_child_optional(section);
    if (!sec) continue;
    for (const auto& key : keys) {
      if (auto v = sec->get_optional<std::string>(key)) {
        canon << section << '.' << key << '=' << trim(*v) << '\n';
      }
    }
  }

  RunConfig cfg;
  cfg.canonical = canon.str();
  const Reader r(tree);

  // [signals]
  {
    std::vector<double> uo, ua, up, yo, ya, yp;
    r.read("signals", "u_omegas", uo, to_doubles);
    r.read("signals", "u_amplitudes", ua, to_doubles);
    r.read("signals", "u_phases", up, to_doubles);
    r.read("signals", "y_omegas", yo, to_doubles);
    r.read("signals", "y_amplitudes", ya, to_doubles);
    r.read("signals", "y_phases", yp, to_doubles);
    r.read("signals", "u_file", cfg.signals.u_file, [](const auto&, const auto& v) { return trim(v); });
    r.read("signals", "y_file", cfg.signals.y_file, [](const auto&, const auto& v) { return trim(v); });
    long long k = 0;
    r.read("signals", "n_frequencies", k, to_integer);
    long long steps = static_cast<long long>(cfg.signals.window.steps);
    long long washout = static_cast<long long>(cfg.signals.window.washout);
    r.read("signals", "steps", steps, to_integer);
    r.read("signals", "washout", washout, to_integer);
    r.read("signals", "tau", cfg.signals.window.tau, to_double);
    if (steps < 1) fail("signals.steps must be >= 1");
    if (washout < 0) fail("signals.washout must be >= 0");
    if (!(cfg.signals.window.tau > 0.0)) fail("signals.tau must be positive");
    cfg.signals.window.steps = static_cast<std::size_t>(steps);
    cfg.signals.window.washout = static_cast<std::size_t>(washout);

    const bool from_files = !cfg.signals.u_file.empty() || !cfg.signals.y_file.empty();
    if (from_files) {
      if (cfg.signals.u_file.empty() || cfg.signals.y_file.empty()) {
        fail("signals.u_file and signals.y_file must be given together");
      }
      if (k < 1) fail("signals.n_frequencies must be >= 1 when reading series files");
      if (!uo.empty() || !yo.empty()) fail("give either signal files or explicit tones, not both");
      cfg.signals.n_frequencies = static_cast<std::size_t>(k);
    } else if (uo.empty() && ua.empty() && yo.empty() && ya.empty()) {
      cfg.signals.u_signal = default_input_signal();
      cfg.signals.y_signal = default_output_signal();
    } else {
      if (yo.empty()) yo = uo;
      cfg.signals.u_signal = build_signal("u", uo, ua, up);
      cfg.signals.y_signal = build_signal("y", yo, ya, yp);
    }
  }

  // [reservoir]
  {
    auto& s = cfg.reservoir;
    long long n = s.n;
    r.read("reservoir", "n", n, to_integer);
    if (n < 1) fail("reservoir.n must be >= 1");
    s.n = static_cast<int>(n);
    r.read("reservoir", "edge_prob", s.edge_prob, to_double);
    r.read("reservoir", "weighted", s.weighted, to_bool);
    r.read("reservoir", "target_max_eig", s.target_max_eig, to_double);
    r.read("reservoir", "topology_file", s.topology_file, [](const auto&, const auto& v) { return trim(v); });
    r.read("reservoir", "spectral_radius", s.spectral_radius, to_double);
    r.read("reservoir", "input_scale", s.input_scale, to_double);
    r.read("reservoir", "readout_beta", s.readout_beta, to_double);
    if (auto v = r.raw("reservoir", "activation")) {
      try {
        s.activation = parse_activation(trim(*v));
      } catch (const Error& e) {
        fail(std::string("reservoir.activation: ") + e.what());
      }
    }
    if (!(s.edge_prob >= 0.0 && s.edge_prob <= 1.0)) fail("reservoir.edge_prob must lie in [0, 1]");
    if (!(s.target_max_eig < 1.0)) fail("reservoir.target_max_eig must be < 1");
    if (!(s.readout_beta >= 0.0)) fail("reservoir.readout_beta must be >= 0");
  }

  // [optimizer]
  {
    auto& o = cfg.optimizer;
    o.n_modes = cfg.reservoir.n;
    long long n_modes = o.n_modes, restarts = o.restarts, iters = o.max_inner_iters;
    r.read("optimizer", "n_modes", n_modes, to_integer);
    r.read("optimizer", "restarts", restarts, to_integer);
    r.read("optimizer", "max_inner_iters", iters, to_integer);
    o.n_modes = static_cast<int>(n_modes);
    o.restarts = static_cast<int>(restarts);
    o.max_inner_iters = static_cast<int>(iters);
    r.read("optimizer", "beta1", o.beta1, to_double);
    r.read("optimizer", "beta2", o.beta2, to_double);
    r.read("optimizer", "gamma", o.gamma, to_double);
    r.read("optimizer", "lambda_init_low", o.lambda_init_low, to_double);
    r.read("optimizer", "lambda_init_high", o.lambda_init_high, to_double);
    r.read("optimizer", "constraint_margin", o.constraint_margin, to_double);
    r.read("optimizer", "grad_tol", o.grad_tol, to_double);
    r.read("optimizer", "seed", o.seed, to_unsigned);
    r.read("optimizer", "frequency_weighting", o.frequency_weighting, to_bool);
    if (r.raw("optimizer", "n_modes") && r.raw("reservoir", "n") && o.n_modes != cfg.reservoir.n) {
      fail("optimizer.n_modes and reservoir.n disagree");
    }
    cfg.reservoir.n = o.n_modes;
    try {
      o.validate();
    } catch (const Error& e) {
      fail(std::string("[optimizer] ") + e.what());
    }
  }

  // [benchmark]
  {
    auto& b = cfg.benchmark;
    auto& sc = b.scenario;
    if (auto v = r.raw("benchmark", "mode")) {
      try {
        sc.mode = parse_sweep_mode(trim(*v));
      } catch (const Error& e) {
        fail(std::string("benchmark.mode: ") + e.what());
      }
    }
    if (auto v = r.raw("benchmark", "methods")) {
      sc.methods.clear();
      for (const auto& name : split_list(*v)) {
        try {
          sc.methods.push_back(parse_method(name));
        } catch (const Error& e) {
          fail(std::string("benchmark.methods: ") + e.what());
        }
      }
    }
    long long fixed = sc.fixed_value, trials = sc.trials, grid = static_cast<long long>(sc.signal_gen.grid_points);
    r.read("benchmark", "fixed_value", fixed, to_integer);
    r.read("benchmark", "trials", trials, to_integer);
    r.read("benchmark", "grid_points", grid, to_integer);
    if (grid < 2) fail("benchmark.grid_points must be >= 2");
    sc.fixed_value = static_cast<int>(fixed);
    sc.trials = static_cast<int>(trials);
    sc.signal_gen.grid_points = static_cast<std::size_t>(grid);
    r.read("benchmark", "sweep_values", sc.sweep_values, to_ints);
    r.read("benchmark", "omega_low", sc.signal_gen.omega_low, to_double);
    r.read("benchmark", "omega_high", sc.signal_gen.omega_high, to_double);
    r.read("benchmark", "min_separation", sc.signal_gen.min_separation, to_double);
    r.read("benchmark", "amp_low", sc.signal_gen.amp_low, to_double);
    r.read("benchmark", "amp_high", sc.signal_gen.amp_high, to_double);
    r.read("benchmark", "epsilons", b.epsilons, to_doubles);
    r.read("benchmark", "beta1_values", b.beta1_values, to_doubles);
    r.read("benchmark", "beta2_values", b.beta2_values, to_doubles);
    const auto read_int = [&](const char* key, int& target) {
      long long v = target;
      r.read("benchmark", key, v, to_integer);
      target = static_cast<int>(v);
    };
    read_int("sensitivity_trials", b.sensitivity_trials);
    read_int("beta_trials", b.beta_trials);
    read_int("theorem_instances", b.theorem_instances);
    read_int("theorem_n_min", b.theorem_n_min);
    read_int("theorem_n_max", b.theorem_n_max);
    read_int("theorem_k_max", b.theorem_k_max);
    r.read("benchmark", "theorem2_beta", b.theorem2_beta, to_double);
    r.read("benchmark", "corrupt_basis", b.corrupt_basis, to_bool);
    sc.seed = cfg.optimizer.seed;
    sc.pipeline = cfg.pipeline();
  }
  return cfg;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), overrides);
}

}  // namespace lrc
