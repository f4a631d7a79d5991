#pragma once

// INI-style experiment configuration.
//
//   [units]        hbar g length_ref mass_ref
//   [particle.X]   state | kind, z0 delta delta0 c_plus_re c_plus_im c_minus_re c_minus_im,
//                  mass | m_inertial m_gravitational
//   [grid]         z_min z_max n_points
//   [solver]       steps_per_fall n_sigma snapshot_stride dt
//   [experiment]   acceleration z_detector auto_match match_tolerance seed threads
//   [sweep]        m_gravitational mass_ratio kinds thetas random_thetas simulate
//   [output]       dir snapshots snapshot_format
//
// Lists are comma separated. '#' and ';' start comments.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "qfall/experiments.hpp"

namespace qfall {

class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, std::string key, std::size_t line)
      : ConfigError(line ? "line " + std::to_string(line) + ": " + what : what), key_(std::move(key)), line_(line) {}
  const std::string& key() const noexcept { return key_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string key_;
  std::size_t line_;
};

struct IniEntry {
  std::string value;
  std::size_t line = 0;
};

struct IniSection {
  std::string name;
  std::size_t line = 0;
  std::map<std::string, IniEntry> entries;
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<IniSection> parse_ini(std::istream& in) {
  std::vector<IniSection> sections;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto cut = raw.find_first_of("#;");
    const std::string line = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("malformed section header '" + line + "'", "", line_no);
      const std::string name = trim(std::string_view(line).substr(1, line.size() - 2));
      for (const auto& s : sections)
        if (s.name == name) throw ParseError("duplicate section [" + name + "]", name, line_no);
      sections.push_back({name, line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value', got '" + line + "'", "", line_no);
    if (sections.empty()) throw ParseError("key outside of any section", trim(line.substr(0, eq)), line_no);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", "", line_no);
    auto& entries = sections.back().entries;
    if (entries.count(key)) throw ParseError("duplicate key '" + key + "'", key, line_no);
    entries[key] = {trim(line.substr(eq + 1)), line_no};
  }
  return sections;
}

inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

inline std::string nearest_key(const std::string& key, const std::vector<std::string>& known) {
  std::string best;
  std::size_t best_d = std::string::npos;
  for (const auto& k : known) {
    const auto d = edit_distance(key, k);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best_d <= std::max<std::size_t>(2, key.size() / 2) ? best : std::string{};
}

/// Snapshot dump requested on the command line or in [output].
struct SnapshotPolicy {
  bool enabled = false;
  std::size_t stride = 0;
  std::string format = "csv";  // csv | bin
};

inline SnapshotPolicy parse_snapshot_policy(const std::string& text) {
  if (text == "none") return {};
  constexpr std::string_view prefix = "strided:";
  if (text.rfind(prefix, 0) == 0) {
    std::size_t k = 0;
    const auto rest = std::string_view(text).substr(prefix.size());
    auto res = std::from_chars(rest.data(), rest.data() + rest.size(), k);
    if (res.ec == std::errc{} && res.ptr == rest.data() + rest.size() && k > 0) return {true, k, "csv"};
  }
  throw ConfigError("snapshots must be 'none' or 'strided:K' with K >= 1, got '" + text + "'");
}

struct LoadedConfig {
  ExperimentConfig config;
  SnapshotPolicy snapshots;
  std::vector<std::string> defaults_applied;
};

namespace detail {

inline const std::map<std::string, std::vector<std::string>>& known_keys() {
  static const std::map<std::string, std::vector<std::string>> keys{
      {"units", {"hbar", "g", "length_ref", "mass_ref"}},
      {"particle",
       {"state", "kind", "z0", "delta", "delta0", "c_plus_re", "c_plus_im", "c_minus_re", "c_minus_im", "mass",
        "m_inertial", "m_gravitational"}},
      {"grid", {"z_min", "z_max", "n_points"}},
      {"solver", {"steps_per_fall", "n_sigma", "snapshot_stride", "dt"}},
      {"experiment", {"acceleration", "z_detector", "auto_match", "match_tolerance", "seed", "threads"}},
      {"sweep", {"m_gravitational", "mass_ratio", "kinds", "thetas", "random_thetas", "simulate"}},
      {"output", {"dir", "snapshots", "snapshot_format"}},
  };
  return keys;
}

class SectionReader {
 public:
  SectionReader(const IniSection& s, std::vector<std::string>& defaults) : s_(s), defaults_(defaults) {}

  bool has(const std::string& key) const { return s_.entries.count(key) != 0; }

  double number(const std::string& key, double fallback) const {
    auto it = s_.entries.find(key);
    if (it == s_.entries.end()) {
      note_default(key, format_double(fallback));
      return fallback;
    }
    return wrap(key, [&] { return parse_double(key, it->second.value); });
  }

  std::size_t count(const std::string& key, std::size_t fallback) const {
    auto it = s_.entries.find(key);
    if (it == s_.entries.end()) {
      note_default(key, std::to_string(fallback));
      return fallback;
    }
    const auto& v = it->second.value;
    std::size_t out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
      throw ParseError("key '" + key + "': expected a non-negative integer, got '" + v + "'", key, it->second.line);
    return out;
  }

  bool flag(const std::string& key, bool fallback) const {
    auto it = s_.entries.find(key);
    if (it == s_.entries.end()) {
      note_default(key, fallback ? "true" : "false");
      return fallback;
    }
    const auto& v = it->second.value;
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ParseError("key '" + key + "': expected true or false, got '" + v + "'", key, it->second.line);
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    auto it = s_.entries.find(key);
    if (it == s_.entries.end()) {
      note_default(key, fallback);
      return fallback;
    }
    return it->second.value;
  }

  std::vector<std::string> words(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(s_.entries.at(key).value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    if (out.empty()) throw ParseError("key '" + key + "': empty list", key, line(key));
    return out;
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    for (const auto& w : words(key)) out.push_back(wrap(key, [&] { return parse_double(key, w); }));
    return out;
  }

  std::size_t line(const std::string& key) const {
    auto it = s_.entries.find(key);
    return it == s_.entries.end() ? s_.line : it->second.line;
  }

  /// Runs `f`, re-raising configuration failures with the key and its line.
  template <class F>
  std::invoke_result_t<F> wrap(const std::string& key, F&& f) const {
    try {
      return f();
    } catch (const ParseError&) {
      throw;
    } catch (const ConfigError& e) {
      std::string msg = e.what();
      if (msg.rfind("key '", 0) != 0) msg = "key '" + key + "': " + msg;
      throw ParseError(msg, key, line(key));
    }
  }

 private:
  void note_default(const std::string& key, const std::string& value) const {
    defaults_.push_back("[" + s_.name + "] " + key + " = " + value);
  }

  const IniSection& s_;
  std::vector<std::string>& defaults_;
};

inline Particle read_particle(const std::string& label, const SectionReader& r) {
  Particle p;
  p.label = label;
  const double delta0 = r.number("delta0", 1.0);
  if (!(delta0 > 0.0)) throw ParseError("key 'delta0': Delta0 must be positive", "delta0", r.line("delta0"));
  if (r.has("state") && r.has("kind"))
    throw ParseError("use either 'state' or 'kind', not both", "state", r.line("state"));
  if (r.has("state")) {
    const double z0 = r.number("z0", 0.0);
    const double delta = r.number("delta", delta0);
    const std::string name = r.text("state", "gaussian");
    p.spec = r.wrap("state", [&] { return preset_state(name, z0, delta, delta0); });
    for (const char* k : {"c_plus_re", "c_plus_im", "c_minus_re", "c_minus_im"})
      if (r.has(k)) throw ParseError(std::string("key '") + k + "' conflicts with a named state", k, r.line(k));
  } else {
    SpecRecord rec;
    for (const char* k : {"kind", "z0", "delta", "delta0", "c_plus_re", "c_plus_im", "c_minus_re", "c_minus_im"}) {
      if (!r.has(k)) continue;
      if (std::string_view(k) != "kind") r.number(k, 0.0);  // reports bad numbers on their own line
      rec[k] = r.text(k, "");
    }
    p.spec = r.wrap(r.has("kind") ? "kind" : "delta", [&] { return from_record(rec); });
  }
  if (r.has("mass") && (r.has("m_inertial") || r.has("m_gravitational")))
    throw ParseError("use either 'mass' or 'm_inertial'/'m_gravitational'", "mass", r.line("mass"));
  if (r.has("mass")) {
    const double m = r.number("mass", 1.0);
    p.mass = {m, m};
  } else {
    p.mass = {r.number("m_inertial", 1.0), r.number("m_gravitational", 1.0)};
  }
  r.wrap(r.has("mass") ? "mass" : "m_inertial", [&] {
    p.mass.validate();
    return 0;
  });
  return p;
}

}  // namespace detail

/// Parses config text. `defaults` seeds unspecified values (subcommand defaults).
inline LoadedConfig parse_config_text(const std::string& text, bool strict, const ExperimentConfig& defaults) {
  std::istringstream in(text);
  const auto sections = parse_ini(in);
  LoadedConfig out;
  auto& c = out.config;
  c = defaults;
  auto& dflt = out.defaults_applied;
  const auto& known = detail::known_keys();

  std::vector<std::string> section_names;
  for (const auto& [k, v] : known) section_names.push_back(k == "particle" ? "particle.1" : k);

  std::vector<Particle> particles;
  for (const auto& s : sections) {
    const bool is_particle = s.name.rfind("particle.", 0) == 0 && s.name.size() > 9;
    const std::string base = is_particle ? "particle" : s.name;
    auto kit = known.find(base);
    if (kit == known.end()) {
      const auto hint = nearest_key(s.name, section_names);
      if (strict)
        throw ParseError("unknown section [" + s.name + "]" + (hint.empty() ? "" : "; did you mean [" + hint + "]?"),
                         s.name, s.line);
      c.warnings.push_back("ignored unknown section [" + s.name + "]");
      continue;
    }
    for (const auto& [key, entry] : s.entries) {
      if (std::find(kit->second.begin(), kit->second.end(), key) != kit->second.end()) continue;
      const auto hint = nearest_key(key, kit->second);
      const std::string msg = "unknown key '" + key + "' in [" + s.name + "]" +
                              (hint.empty() ? "" : "; did you mean '" + hint + "'?");
      if (strict) throw ParseError(msg, key, entry.line);
      c.warnings.push_back("ignored " + msg);
    }
    detail::SectionReader r(s, dflt);
    if (is_particle) {
      particles.push_back(detail::read_particle(s.name.substr(9), r));
    } else if (base == "units") {
      c.units = {r.number("hbar", 1.0), r.number("g", 1.0), r.number("length_ref", 1.0), r.number("mass_ref", 1.0)};
      r.wrap("hbar", [&] {
        c.units.validate();
        return 0;
      });
    } else if (base == "grid") {
      if (!(r.has("z_min") && r.has("z_max") && r.has("n_points")))
        throw ParseError("[grid] needs z_min, z_max and n_points together", "grid", s.line);
      const double lo = r.number("z_min", 0.0);
      const double hi = r.number("z_max", 0.0);
      const std::size_t n = r.count("n_points", 0);
      c.solver.grid = r.wrap("n_points", [&] { return make_grid(lo, hi, n); });
    } else if (base == "solver") {
      c.solver.steps_per_fall = r.count("steps_per_fall", c.solver.steps_per_fall);
      c.solver.n_sigma = r.number("n_sigma", c.solver.n_sigma);
      c.solver.snapshot_stride = r.count("snapshot_stride", c.solver.snapshot_stride);
      if (r.has("dt")) {
        const double dt = r.number("dt", 0.0);
        if (!(dt > 0.0)) throw ParseError("key 'dt': time step must be positive", "dt", r.line("dt"));
        c.solver.dt = dt;
      }
      if (!(c.solver.n_sigma > 0.0))
        throw ParseError("key 'n_sigma': window width must be positive", "n_sigma", r.line("n_sigma"));
    } else if (base == "experiment") {
      c.acceleration = r.number("acceleration", c.units.g);
      c.z_detector = r.number("z_detector", c.z_detector);
      c.auto_match = r.flag("auto_match", c.auto_match);
      c.match_tolerance = r.number("match_tolerance", c.match_tolerance);
      c.seed = r.count("seed", c.seed);
      c.threads = r.count("threads", c.threads);
    } else if (base == "sweep") {
      if (r.has("m_gravitational")) c.sweep.gravitational_masses = r.numbers("m_gravitational");
      if (r.has("mass_ratio")) c.sweep.mass_ratios = r.numbers("mass_ratio");
      if (r.has("kinds")) {
        c.sweep.state_kinds = r.words("kinds");
        for (const auto& k : c.sweep.state_kinds) r.wrap("kinds", [&] { return preset_state(k, 10.0, 1.0, 1.0); });
      }
      if (r.has("thetas")) c.sweep.thetas = r.numbers("thetas");
      c.sweep.random_thetas = r.count("random_thetas", c.sweep.random_thetas);
      c.sweep.simulate = r.flag("simulate", c.sweep.simulate);
    } else if (base == "output") {
      c.output_dir = r.text("dir", c.output_dir);
      out.snapshots = r.wrap("snapshots", [&] { return parse_snapshot_policy(r.text("snapshots", "none")); });
      out.snapshots.format = r.text("snapshot_format", "csv");
      if (out.snapshots.format != "csv" && out.snapshots.format != "bin")
        throw ParseError("key 'snapshot_format': expected csv or bin", "snapshot_format", r.line("snapshot_format"));
    }
  }
  // [experiment] may appear before [units]; keep a = g unless set explicitly.
  bool acceleration_set = false;
  for (const auto& s : sections)
    if (s.name == "experiment" && s.entries.count("acceleration")) acceleration_set = true;
  if (!acceleration_set) c.acceleration = c.units.g;
  if (!particles.empty()) c.particles = std::move(particles);
  if (c.particles.empty()) throw ParseError("at least one [particle.N] section is required", "particle", 0);
  c.validate();
  return out;
}

inline LoadedConfig parse_config(const std::string& path, bool strict, const ExperimentConfig& defaults) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), strict, defaults);
}

}  // namespace qfall
