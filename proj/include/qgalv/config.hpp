#pragma once

// Scenario files: INI-style sections with a unit on every physical quantity.
//
//   [trap]
//   omega_r = 500 Hz        # Hz/kHz/MHz are cyclic and multiplied by 2 pi
//   atoms = 1e5
//
// Values are converted to SI at load. The unit "mu" (frequencies), "hbar/mu" (times) and
// "mu/kB" (temperatures) refer to the condensate chemical potential and are resolved once
// the trap is known. Unknown sections or keys are errors.
//
// A file whose lines start with "# cfg " (an output header) is read through those lines only,
// so any output file can be fed back as a configuration.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qgalv/condensate.hpp"
#include "qgalv/constants.hpp"
#include "qgalv/counting.hpp"
#include "qgalv/error.hpp"
#include "qgalv/inversion.hpp"
#include "qgalv/io.hpp"
#include "qgalv/kernel.hpp"
#include "qgalv/nanowire.hpp"
#include "qgalv/oracle.hpp"
#include "qgalv/spectra.hpp"

namespace qgalv::config {

enum class Dim { Frequency, Length, Time, Field, Temperature, Current2, SpectralDensity, Number, Integer, Text, Flag };

struct KeySpec {
  const char* section;
  const char* key;
  Dim dim;
};

// clang-format off
inline const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> s{
      {"run", "command", Dim::Text},
      {"run", "seed", Dim::Integer},
      {"run", "threads", Dim::Integer},
      {"trap", "omega_r", Dim::Frequency},
      {"trap", "omega_z", Dim::Frequency},
      {"trap", "atoms", Dim::Number},
      {"trap", "scattering_length", Dim::Length},
      {"nanowire", "length", Dim::Length},
      {"nanowire", "distance", Dim::Length},
      {"nanowire", "amplitude", Dim::Length},
      {"nanowire", "omega_cnt", Dim::Frequency},
      {"nanowire", "z_offset", Dim::Length},
      {"kernel", "mode", Dim::Text},
      {"kernel", "level_points", Dim::Integer},
      {"kernel", "omega_min", Dim::Frequency},
      {"kernel", "omega_max", Dim::Frequency},
      {"kernel", "points", Dim::Integer},
      {"kernel", "atoms_sweep", Dim::Text},
      {"model", "type", Dim::Text},
      {"model", "base", Dim::Text},
      {"model", "level", Dim::SpectralDensity},
      {"model", "omega0", Dim::Frequency},
      {"model", "weight", Dim::Current2},
      {"model", "symmetric", Dim::Flag},
      {"model", "centre", Dim::Frequency},
      {"model", "gamma", Dim::Frequency},
      {"model", "power", Dim::Current2},
      {"model", "density", Dim::SpectralDensity},
      {"model", "cutoff", Dim::Frequency},
      {"model", "file", Dim::Text},
      {"model", "temperature", Dim::Temperature},
      {"scan", "omega_min", Dim::Frequency},
      {"scan", "omega_max", Dim::Frequency},
      {"scan", "b_min", Dim::Field},
      {"scan", "b_max", Dim::Field},
      {"scan", "points", Dim::Integer},
      {"scan", "T", Dim::Time},
      {"scan", "regime", Dim::Text},
      {"detection", "efficiency", Dim::Number},
      {"detection", "shots", Dim::Integer},
      {"detection", "seed", Dim::Integer},
      {"oracle", "ensemble", Dim::Integer},
      {"oracle", "dt", Dim::Time},
      {"oracle", "n_rho", Dim::Integer},
      {"oracle", "n_theta", Dim::Integer},
      {"oracle", "n_phi", Dim::Integer},
      {"oracle", "freeze_u", Dim::Flag},
      {"oracle", "z_threshold", Dim::Number},
      {"inversion", "scan", Dim::Text},
      {"inversion", "kernel", Dim::Text},
      {"inversion", "omega_min", Dim::Frequency},
      {"inversion", "omega_max", Dim::Frequency},
      {"inversion", "lambda", Dim::Number},
      {"inversion", "regularizer", Dim::Text},
      {"inversion", "nonnegative", Dim::Flag},
      {"inversion", "discrepancy", Dim::Number},
      {"inversion", "sigma_rel", Dim::Number},
      {"inversion", "lambda_scan", Dim::Text},
  };
  return s;
}
// clang-format on

struct UnitDef {
  const char* name;
  double factor;
  int mu_power;  ///< 0: plain SI factor; 1: times the mu-derived scale
};

inline const std::vector<UnitDef>& units(Dim d) {
  static const std::vector<UnitDef> freq{{"rad/s", 1, 0},       {"Hz", 2 * pi, 0}, {"kHz", 2 * pi * 1e3, 0},
                                         {"MHz", 2 * pi * 1e6, 0}, {"GHz", 2 * pi * 1e9, 0}, {"mu", 1, 1}};
  static const std::vector<UnitDef> len{{"m", 1, 0}, {"mm", 1e-3, 0}, {"um", 1e-6, 0}, {"nm", 1e-9, 0}};
  static const std::vector<UnitDef> time{{"s", 1, 0},      {"ms", 1e-3, 0}, {"us", 1e-6, 0},
                                         {"ns", 1e-9, 0},  {"hbar/mu", 1, 1}};
  static const std::vector<UnitDef> field{{"T", 1, 0}, {"mT", 1e-3, 0}, {"uT", 1e-6, 0}, {"G", 1e-4, 0}, {"mG", 1e-7, 0}};
  static const std::vector<UnitDef> temp{{"K", 1, 0}, {"mK", 1e-3, 0}, {"uK", 1e-6, 0}, {"nK", 1e-9, 0}, {"mu/kB", 1, 1}};
  static const std::vector<UnitDef> cur2{{"A^2", 1, 0}, {"mA^2", 1e-6, 0}, {"uA^2", 1e-12, 0}, {"nA^2", 1e-18, 0}};
  static const std::vector<UnitDef> sd{{"A^2*s", 1, 0}, {"mA^2*s", 1e-6, 0}, {"uA^2*s", 1e-12, 0}, {"nA^2*s", 1e-18, 0}};
  static const std::vector<UnitDef> none{};
  switch (d) {
    case Dim::Frequency: return freq;
    case Dim::Length: return len;
    case Dim::Time: return time;
    case Dim::Field: return field;
    case Dim::Temperature: return temp;
    case Dim::Current2: return cur2;
    case Dim::SpectralDensity: return sd;
    default: return none;
  }
}

struct Value {
  Dim dim = Dim::Text;
  std::string raw;
  double number = 0;  ///< SI, or in units of the mu scale if mu_relative
  bool mu_relative = false;
};

class Config {
 public:
  /// Parses scenario text. `source` prefixes error messages.
  static Config parse(const std::string& text, const std::string& source = "config") {
    std::vector<std::string> lines;
    {
      std::istringstream is(text);
      std::string line;
      bool embedded = false;
      std::vector<std::string> all;
      while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.rfind("# cfg ", 0) == 0) {
          embedded = true;
          lines.push_back(line.substr(6));
        }
        all.push_back(line);
      }
      if (!embedded) lines = std::move(all);
    }
    Config c;
    std::string section;
    for (std::size_t n = 0; n < lines.size(); ++n) {
      const std::string where = source + ":" + std::to_string(n + 1);
      std::string line = strip_comment(lines[n]);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        const auto close = line.find(']');
        if (close == std::string::npos) throw ValidationError(where + ": unterminated section header");
        section = trim(line.substr(1, close - 1));
        if (!known_section(section)) throw ValidationError(where + ": unknown section [" + section + "]");
        line = trim(line.substr(close + 1));
        if (line.empty()) continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ValidationError(where + ": expected 'key = value'");
      if (section.empty()) throw ValidationError(where + ": key outside any section");
      const std::string key = trim(line.substr(0, eq));
      const std::string val = trim(line.substr(eq + 1));
      c.set(section, key, val, where);
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  /// Sets or replaces one entry, validating key and unit.
  void set(const std::string& section, const std::string& key, const std::string& raw,
           const std::string& where = "override") {
    const std::string name = section + "." + key;
    const KeySpec* spec = find(section, key);
    if (!spec) throw ValidationError(where + ": unknown key '" + name + "'");
    Value v;
    v.dim = spec->dim;
    v.raw = raw;
    convert(v, name, where);
    values_[section][key] = v;
  }

  [[nodiscard]] bool has(const std::string& section, const std::string& key) const {
    const auto s = values_.find(section);
    return s != values_.end() && s->second.count(key) > 0;
  }

  /// Keys present in a section.
  [[nodiscard]] std::vector<std::string> keys(const std::string& section) const {
    std::vector<std::string> out;
    const auto s = values_.find(section);
    if (s == values_.end()) return out;
    for (const auto& kv : s->second) out.push_back(kv.first);
    return out;
  }

  /// Scale for "mu" units: the chemical potential [J] and hbar.
  void resolve_mu(double mu, double hbar) {
    mu_ = mu;
    hbar_ = hbar;
  }

  [[nodiscard]] double number(const std::string& section, const std::string& key) const {
    const Value& v = at(section, key);
    detail::require(v.dim != Dim::Text && v.dim != Dim::Flag, section + "." + key + " is not numeric");
    if (!v.mu_relative) return v.number;
    if (!mu_) throw ValidationError(section + "." + key + ": 'mu' units need the trap to be resolved first");
    switch (v.dim) {
      case Dim::Frequency: return v.number * *mu_ / hbar_;
      case Dim::Time: return v.number * hbar_ / *mu_;
      case Dim::Temperature: return v.number * *mu_ / boltzmann;
      default: throw ValidationError(section + "." + key + ": 'mu' unit not allowed here");
    }
  }

  [[nodiscard]] double number(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? number(section, key) : fallback;
  }

  [[nodiscard]] std::uint64_t integer(const std::string& section, const std::string& key, std::uint64_t fallback) const {
    if (!has(section, key)) return fallback;
    return std::stoull(at(section, key).raw);
  }

  [[nodiscard]] std::string text(const std::string& section, const std::string& key,
                                 const std::string& fallback = "") const {
    return has(section, key) ? at(section, key).raw : fallback;
  }

  [[nodiscard]] bool flag(const std::string& section, const std::string& key, bool fallback) const {
    return has(section, key) ? at(section, key).raw == "true" : fallback;
  }

  /// Canonical "[section] key = value unit" lines with SI numbers. Requires mu to be
  /// resolved if any entry uses mu units.
  [[nodiscard]] std::vector<std::string> canonical() const {
    std::vector<std::string> out;
    for (const auto& spec : schema()) {
      if (!has(spec.section, spec.key)) continue;
      const Value& v = at(spec.section, spec.key);
      std::string line = std::string("[") + spec.section + "] " + spec.key + " = ";
      switch (v.dim) {
        case Dim::Text:
        case Dim::Flag:
        case Dim::Integer: line += v.raw; break;
        case Dim::Number: line += io::format_double(v.number); break;
        default:
          line += io::format_double(number(spec.section, spec.key)) + " " + units(v.dim).front().name;
      }
      out.push_back(line);
    }
    return out;
  }

  /// Rejects keys of `section` not in `allowed`.
  void only(const std::string& section, const std::vector<std::string>& allowed, const std::string& context) const {
    for (const auto& k : keys(section)) {
      bool ok = false;
      for (const auto& a : allowed) ok = ok || a == k;
      if (!ok) throw ValidationError(section + "." + k + ": not a parameter of " + context);
    }
  }

 private:
  std::map<std::string, std::map<std::string, Value>> values_;
  std::optional<double> mu_;
  double hbar_ = PhysicalConstants{}.hbar;

  [[nodiscard]] const Value& at(const std::string& section, const std::string& key) const {
    const auto s = values_.find(section);
    if (s == values_.end() || !s->second.count(key)) throw ValidationError("missing " + section + "." + key);
    return s->second.at(key);
  }

  static const KeySpec* find(const std::string& section, const std::string& key) {
    for (const auto& s : schema())
      if (section == s.section && key == s.key) return &s;
    return nullptr;
  }

  static bool known_section(const std::string& section) {
    for (const auto& s : schema())
      if (section == s.section) return true;
    return false;
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
  }

  static std::string strip_comment(const std::string& s) {
    const auto p = s.find_first_of("#;");
    return p == std::string::npos ? s : s.substr(0, p);
  }

  static void convert(Value& v, const std::string& name, const std::string& where) {
    const std::string ctx = where + ": " + name;
    switch (v.dim) {
      case Dim::Text:
        if (v.raw.empty()) throw ValidationError(ctx + ": empty value");
        return;
      case Dim::Flag:
        if (v.raw != "true" && v.raw != "false") throw ValidationError(ctx + ": expected true or false");
        return;
      case Dim::Integer: {
        std::size_t pos = 0;
        bool ok = !v.raw.empty() && v.raw.find_first_not_of("0123456789") == std::string::npos;
        if (ok) {
          try {
            (void)std::stoull(v.raw, &pos);
          } catch (const std::exception&) {
            ok = false;
          }
        }
        if (!ok) throw ValidationError(ctx + ": expected a non-negative integer, got '" + v.raw + "'");
        v.number = static_cast<double>(std::stoull(v.raw));
        return;
      }
      case Dim::Number: {
        std::istringstream is(v.raw);
        std::string num, extra;
        is >> num >> extra;
        if (!extra.empty()) throw ValidationError(ctx + ": dimensionless value takes no unit");
        v.number = io::parse_double(num, ctx);
        if (!std::isfinite(v.number)) throw ValidationError(ctx + ": value must be finite");
        return;
      }
      default: break;
    }
    std::istringstream is(v.raw);
    std::string num, unit, extra;
    is >> num >> unit >> extra;
    const auto& table = units(v.dim);
    std::string expected;
    for (const auto& u : table) expected += (expected.empty() ? "" : ", ") + std::string(u.name);
    if (unit.empty()) throw ValidationError(ctx + ": missing unit (expected one of " + expected + ")");
    if (!extra.empty()) throw ValidationError(ctx + ": unexpected text after unit");
    const double x = io::parse_double(num, ctx);
    if (!std::isfinite(x)) throw ValidationError(ctx + ": value must be finite");
    for (const auto& u : table) {
      if (unit == u.name) {
        v.number = x * u.factor;
        v.mu_relative = u.mu_power != 0;
        return;
      }
    }
    throw ValidationError(ctx + ": unknown unit '" + unit + "' (expected one of " + expected + ")");
  }
};

// Builders from a parsed configuration. Missing entries take the library defaults.

[[nodiscard]] inline TrapConfig trap_from(const Config& c) {
  TrapConfig t;
  t.omega_r = c.number("trap", "omega_r", t.omega_r);
  t.omega_z = c.number("trap", "omega_z", t.omega_z);
  t.atom_number = c.number("trap", "atoms", t.atom_number);
  t.constants.a_s = c.number("trap", "scattering_length", t.constants.a_s);
  t.validate();
  return t;
}

[[nodiscard]] inline NanowireConfig nanowire_from(const Config& c) {
  NanowireConfig w;
  w.length = c.number("nanowire", "length", w.length);
  w.distance = c.number("nanowire", "distance", w.distance);
  w.amplitude = c.number("nanowire", "amplitude", w.amplitude);
  w.omega_cnt = c.number("nanowire", "omega_cnt", w.omega_cnt);
  w.z_offset = c.number("nanowire", "z_offset", w.z_offset);
  (void)w.validate();
  return w;
}

[[nodiscard]] inline KernelOptions kernel_options_from(const Config& c, unsigned threads) {
  KernelOptions o;
  o.mode = kernel_mode_from_string(c.text("kernel", "mode", "exact3d"));
  o.level_points = c.integer("kernel", "level_points", 65);
  o.threads = threads;
  return o;
}

/// Model from the [model] section; keys foreign to the chosen type are rejected.
[[nodiscard]] inline NoiseSpectrumModel model_from(const Config& c, const PhysicalConstants& k) {
  const std::string type = c.text("model", "type", "");
  if (type.empty()) throw ValidationError("missing model.type");
  auto base_of = [&](const std::string& t, std::vector<std::string>& used) -> NoiseSpectrumModel {
    auto need = [&](const char* key) {
      used.push_back(key);
      return c.number("model", key);
    };
    if (t == "flat") return NoiseSpectrumModel::flat(need("level"));
    if (t == "line") {
      used.push_back("symmetric");
      return NoiseSpectrumModel::line(need("omega0"), need("weight"), c.flag("model", "symmetric", true));
    }
    if (t == "lorentzian") {
      used.push_back("centre");
      return NoiseSpectrumModel::lorentzian(c.number("model", "centre", 0.0), need("gamma"), need("power"));
    }
    if (t == "band") return NoiseSpectrumModel::band(need("density"), need("cutoff"));
    if (t == "tabulated") {
      used.push_back("file");
      const auto tab = io::read_csv_file(c.text("model", "file"));
      return NoiseSpectrumModel::tabulated(tab.column("omega"), tab.column("S"));
    }
    throw ValidationError("model.type: unknown model '" + t +
                          "' (expected flat, line, lorentzian, band, tabulated or detailed_balance)");
  };
  std::vector<std::string> used{"type"};
  NoiseSpectrumModel m;
  if (type == "detailed_balance") {
    used.push_back("base");
    used.push_back("temperature");
    const std::string base = c.text("model", "base", "");
    if (base.empty()) throw ValidationError("model.base: detailed_balance needs a base model");
    auto b = base_of(base, used);
    m = NoiseSpectrumModel::detailed_balance(b, c.number("model", "temperature"), k.hbar);
  } else {
    m = base_of(type, used);
  }
  c.only("model", used, "model type " + type);
  return m;
}

struct ScanGrid {
  std::vector<double> omega;
  double T = 1;
  Regime regime = Regime::LongTime;
};

[[nodiscard]] inline ScanGrid scan_from(const Config& c, const NanowireConfig& w, const PhysicalConstants& k) {
  ScanGrid g;
  const auto points = c.integer("scan", "points", 121);
  detail::require(points >= 1, "scan.points must be >= 1");
  const bool by_field = c.has("scan", "b_min") || c.has("scan", "b_max");
  double lo, hi;
  if (by_field) {
    detail::require(!c.has("scan", "omega_min") && !c.has("scan", "omega_max"),
                    "scan: give either omega_min/omega_max or b_min/b_max, not both");
    // Omega decreases with B_offs.
    lo = omega_from_boffs(w, c.number("scan", "b_max"), k);
    hi = omega_from_boffs(w, c.number("scan", "b_min"), k);
  } else {
    lo = c.number("scan", "omega_min");
    hi = c.number("scan", "omega_max");
  }
  detail::require(points == 1 || hi > lo, "scan: grid upper end must exceed lower end");
  g.omega = points == 1 ? std::vector<double>{lo} : quad::linspace(lo, hi, points);
  g.T = c.number("scan", "T");
  detail::require(g.T > 0, "scan.T must be positive");
  g.regime = regime_from_string(c.text("scan", "regime", "longtime"));
  return g;
}

[[nodiscard]] inline DetectionConfig detection_from(const Config& c, std::uint64_t seed) {
  DetectionConfig d;
  d.efficiency = c.number("detection", "efficiency", 1.0);
  d.shots = c.integer("detection", "shots", 1);
  d.seed = c.integer("detection", "seed", seed);
  d.validate();
  return d;
}

[[nodiscard]] inline OracleOptions oracle_from(const Config& c, std::uint64_t seed, unsigned threads) {
  OracleOptions o;
  o.ensemble = c.integer("oracle", "ensemble", o.ensemble);
  o.dt = c.number("oracle", "dt", 0.0);
  o.n_rho = c.integer("oracle", "n_rho", o.n_rho);
  o.n_theta = c.integer("oracle", "n_theta", o.n_theta);
  o.n_phi = c.integer("oracle", "n_phi", o.n_phi);
  o.freeze_u = c.flag("oracle", "freeze_u", o.freeze_u);
  o.seed = seed;
  o.threads = threads;
  return o;
}

}  // namespace qgalv::config
