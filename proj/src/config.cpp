#include "filmctl/config.hpp"

#include "filmctl/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace filmctl {

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw InvalidArgument("log_spaced needs 0 < lo <= hi and count >= 1");
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i)
    out[i] = count == 1 ? lo : i == count - 1 ? hi : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (count - 1));
  return out;
}

SweepSpec::SweepSpec() : reynolds(log_spaced(1.0, 100.0, 12)) {}

void SweepSpec::validate() const {
  if (reynolds.empty()) throw InvalidArgument("sweep reynolds list is empty");
  if (m_list.empty()) throw InvalidArgument("sweep m_list is empty");
  if (p_list.empty()) throw InvalidArgument("sweep p_list is empty");
  if (strategies.empty()) throw InvalidArgument("sweep strategies list is empty");
  for (double re : reynolds)
    if (!(re > 0.0)) throw InvalidArgument("sweep reynolds values must be positive");
  for (int m : m_list)
    if (m < 1) throw InvalidArgument("sweep m_list values must be positive");
  for (int p : p_list)
    if (p < 1) throw InvalidArgument("sweep p_list values must be positive");
  if (workers < 0) throw InvalidArgument("sweep workers must be non-negative");
}

RunConfig Config::run_config() const {
  RunConfig r = run;
  r.perturbation.seed = seed;
  return r;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& s) {
  double v = 0.0;
  const std::string t = trim(s);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw InvalidArgument("expected a number, got '" + s + "'");
  return v;
}

long long to_integer(const std::string& s) {
  long long v = 0;
  const std::string t = trim(s);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw InvalidArgument("expected an integer, got '" + s + "'");
  return v;
}

int to_int(const std::string& s) {
  const long long v = to_integer(s);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw InvalidArgument("integer out of range: '" + s + "'");
  return static_cast<int>(v);
}

std::uint64_t to_seed(const std::string& s) {
  std::uint64_t v = 0;
  const std::string t = trim(s);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw InvalidArgument("expected a non-negative integer, got '" + s + "'");
  return v;
}

bool to_bool(const std::string& s) {
  const std::string t = trim(s);
  if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
  if (t == "false" || t == "no" || t == "off" || t == "0") return false;
  throw InvalidArgument("expected true or false, got '" + s + "'");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  for (char ch : s) {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else {
      item += ch;
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

template <class T, class F>
std::vector<T> to_list(const std::string& s, F convert) {
  std::vector<T> out;
  for (const std::string& item : split_list(s)) out.push_back(convert(item));
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F format) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format(v[i]);
  }
  return out;
}

std::string strategy_text(const std::optional<Strategy>& s) { return s ? to_string(*s) : "none"; }

std::optional<Strategy> parse_strategy(const std::string& s) {
  const std::string t = trim(s);
  if (t == "none" || t == "off") return std::nullopt;
  return strategy_from_string(t);
}

struct Key {
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, const std::string&)> set;
};

const std::map<std::string, Key>& keys() {
  static const std::map<std::string, Key> table = [] {
    std::map<std::string, Key> k;
    auto dbl = [&](const std::string& name, auto accessor) {
      k[name] = {[accessor](const Config& c) { return fmt(accessor(const_cast<Config&>(c))); },
                 [accessor](Config& c, const std::string& v) { accessor(c) = to_double(v); }};
    };
    auto integer = [&](const std::string& name, auto accessor) {
      k[name] = {[accessor](const Config& c) { return std::to_string(accessor(const_cast<Config&>(c))); },
                 [accessor](Config& c, const std::string& v) { accessor(c) = to_int(v); }};
    };
    auto boolean = [&](const std::string& name, auto accessor) {
      k[name] = {[accessor](const Config& c) { return std::string(accessor(const_cast<Config&>(c)) ? "true" : "false"); },
                 [accessor](Config& c, const std::string& v) { accessor(c) = to_bool(v); }};
    };

    dbl("physics.reynolds", [](Config& c) -> double& { return c.run.params.reynolds; });
    dbl("physics.capillary", [](Config& c) -> double& { return c.run.params.capillary; });
    dbl("physics.theta", [](Config& c) -> double& { return c.run.params.theta; });
    dbl("physics.length", [](Config& c) -> double& { return c.run.params.length; });
    dbl("physics.beta", [](Config& c) -> double& { return c.run.params.beta; });

    integer("grid.nodes", [](Config& c) -> int& { return c.run.nodes; });
    boolean("grid.dealias", [](Config& c) -> bool& { return c.run.dealias; });

    k["control.strategy"] = {[](const Config& c) { return strategy_text(c.run.strategy); },
                             [](Config& c, const std::string& v) { c.run.strategy = parse_strategy(v); }};
    integer("control.actuators", [](Config& c) -> int& { return c.run.actuators; });
    integer("control.observers", [](Config& c) -> int& { return c.run.observers; });
    dbl("control.omega", [](Config& c) -> double& { return c.run.omega; });
    k["control.retain"] = {[](const Config& c) { return std::to_string(c.run.synthesis.retain.value_or(0)); },
                           [](Config& c, const std::string& v) {
                             const int r = to_int(v);
                             if (r < 0) throw InvalidArgument("retain must be non-negative (0 selects automatically)");
                             c.run.synthesis.retain = r > 0 ? std::optional<int>(r) : std::nullopt;
                           }};
    dbl("control.observer_weight", [](Config& c) -> double& { return c.run.synthesis.observer_weight; });

    dbl("synthesis.sof_tolerance", [](Config& c) -> double& { return c.run.synthesis.sof.tolerance; });
    integer("synthesis.sof_max_iterations", [](Config& c) -> int& { return c.run.synthesis.sof.max_iterations; });

    dbl("run.burn_in_time", [](Config& c) -> double& { return c.run.burn_in_time; });
    dbl("run.control_time", [](Config& c) -> double& { return c.run.control_time; });
    dbl("run.epsilon", [](Config& c) -> double& { return c.run.epsilon; });
    dbl("run.h_min", [](Config& c) -> double& { return c.run.h_min; });
    dbl("run.h_max", [](Config& c) -> double& { return c.run.h_max; });
    dbl("run.sample_interval", [](Config& c) -> double& { return c.run.sample_interval; });
    k["run.snapshot_times"] = {[](const Config& c) { return join(c.run.snapshot_times, fmt); },
                               [](Config& c, const std::string& v) { c.run.snapshot_times = to_list<double>(v, to_double); }};
    k["run.seed"] = {[](const Config& c) { return std::to_string(c.seed); },
                     [](Config& c, const std::string& v) { c.seed = to_seed(v); }};
    integer("run.rotate_nodes", [](Config& c) -> int& { return c.run.rotate_nodes; });

    k["perturbation.modes"] = {
        [](const Config& c) { return join(c.run.perturbation.modes, [](int m) { return std::to_string(m); }); },
        [](Config& c, const std::string& v) { c.run.perturbation.modes = to_list<int>(v, to_int); }};
    dbl("perturbation.amplitude", [](Config& c) -> double& { return c.run.perturbation.amplitude; });
    dbl("perturbation.noise", [](Config& c) -> double& { return c.run.perturbation.noise; });

    dbl("integrator.rtol", [](Config& c) -> double& { return c.run.stepper.rtol; });
    dbl("integrator.atol", [](Config& c) -> double& { return c.run.stepper.atol; });
    dbl("integrator.dt_init", [](Config& c) -> double& { return c.run.stepper.dt_init; });
    dbl("integrator.dt_min", [](Config& c) -> double& { return c.run.stepper.dt_min; });
    dbl("integrator.dt_max", [](Config& c) -> double& { return c.run.stepper.dt_max; });

    k["sweep.reynolds"] = {[](const Config& c) { return join(c.sweep.reynolds, fmt); },
                           [](Config& c, const std::string& v) { c.sweep.reynolds = to_list<double>(v, to_double); }};
    k["sweep.m_list"] = {[](const Config& c) { return join(c.sweep.m_list, [](int m) { return std::to_string(m); }); },
                         [](Config& c, const std::string& v) { c.sweep.m_list = to_list<int>(v, to_int); }};
    k["sweep.p_list"] = {[](const Config& c) { return join(c.sweep.p_list, [](int m) { return std::to_string(m); }); },
                         [](Config& c, const std::string& v) { c.sweep.p_list = to_list<int>(v, to_int); }};
    k["sweep.strategies"] = {
        [](const Config& c) { return join(c.sweep.strategies, [](Strategy s) { return std::string(to_string(s)); }); },
        [](Config& c, const std::string& v) {
          c.sweep.strategies = to_list<Strategy>(v, [](const std::string& s) { return strategy_from_string(s); });
        }};
    integer("sweep.workers", [](Config& c) -> int& { return c.sweep.workers; });

    k["output.dir"] = {[](const Config& c) { return c.out_dir; },
                       [](Config& c, const std::string& v) { c.out_dir = trim(v); }};
    boolean("output.dump_matrices", [](Config& c) -> bool& { return c.dump_matrices; });
    return k;
  }();
  return table;
}

const std::map<std::string, std::string>& aliases() {
  static const std::map<std::string, std::string> a{
      {"re", "physics.reynolds"},     {"reynolds", "physics.reynolds"}, {"m", "control.actuators"},
      {"p", "control.observers"},     {"seed", "run.seed"},             {"strategy", "control.strategy"},
      {"out_dir", "output.dir"},      {"out-dir", "output.dir"},        {"workers", "sweep.workers"},
      {"snapshot_times", "run.snapshot_times"}, {"snapshot-times", "run.snapshot_times"},
      {"nodes", "grid.nodes"},        {"beta", "physics.beta"},
  };
  return a;
}

void set_key(Config& c, const std::string& key, const std::string& value, int line) {
  const auto it = keys().find(key);
  if (it == keys().end()) throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'", line);
  try {
    it->second.set(c, value);
  } catch (const InvalidArgument& e) {
    throw ConfigError((line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + key + ": " + e.what(),
                      line);
  }
}

// Semantic checks after all entries are in, mapped back to the line of the
// key responsible when known.
void check(const Config& c, const std::map<std::string, int>& lines) {
  auto fail = [&](const std::string& key, const std::string& what) {
    const auto it = lines.find(key);
    const int line = it == lines.end() ? 0 : it->second;
    throw ConfigError((line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + key + ": " + what, line);
  };
  try {
    c.run.params.validate();
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    for (const char* f : {"reynolds", "capillary", "theta", "length", "beta"})
      if (msg.find(f) != std::string::npos) fail(std::string("physics.") + f, msg);
    fail("physics", msg);
  }
  try {
    c.run.validate();
  } catch (const InvalidArgument& e) {
    fail("run", e.what());
  }
  try {
    c.sweep.validate();
  } catch (const InvalidArgument& e) {
    fail("sweep", e.what());
  }
}

std::string canonical_key(const std::string& key) {
  std::string k = key;
  while (!k.empty() && k.front() == '-') k.erase(k.begin());
  if (const auto it = aliases().find(k); it != aliases().end()) k = it->second;
  return k;
}

void parse_entries(const std::string& text, Config& c, std::map<std::string, int>& lines) {
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find_first_of("#;");
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("line " + std::to_string(line) + ": unterminated section header", line);
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) throw ConfigError("line " + std::to_string(line) + ": empty section name", line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line) + ": expected 'key = value', got '" + s + "'", line);
    const std::string name = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (name.empty()) throw ConfigError("line " + std::to_string(line) + ": missing key before '='", line);
    if (section.empty())
      throw ConfigError("line " + std::to_string(line) + ": key '" + name + "' outside any [section]", line);
    const std::string key = section + "." + name;
    if (lines.count(key))
      throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + key + "' (first on line " +
                            std::to_string(lines[key]) + ")",
                        line);
    set_key(c, key, value, line);
    lines[key] = line;
  }
}

}  // namespace

Config parse_config(const std::string& text, const std::vector<Override>& overrides) {
  Config c;
  std::map<std::string, int> lines;
  parse_entries(text, c, lines);
  for (const auto& [key, value] : overrides) {
    const std::string k = canonical_key(key);
    set_key(c, k, value, 0);
    lines.emplace(k, 0);
  }
  if (!lines.count("physics.reynolds"))
    throw ConfigError("missing required key 'reynolds' in section [physics]", 0);
  check(c, lines);
  return c;
}

Config load_config(const std::string& path, const std::vector<Override>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'", 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

void apply_override(Config& config, const std::string& key, const std::string& value) {
  set_key(config, canonical_key(key), value, 0);
  check(config, {});
}

std::string to_text(const Config& config) {
  std::string out, section;
  for (const auto& [key, k] : keys()) {
    const auto dot = key.find('.');
    const std::string s = key.substr(0, dot);
    if (s != section) {
      if (!section.empty()) out += "\n";
      out += "[" + s + "]\n";
      section = s;
    }
    out += key.substr(dot + 1) + " = " + k.get(config) + "\n";
  }
  return out;
}

std::string config_hash(const Config& config) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : to_text(config)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace filmctl
