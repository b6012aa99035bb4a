#pragma once

// Self-describing delimited tables.
//
//   # qgalv-table 1
//   # key = value            header entries, in insertion order
//   # cfg [section] key = v  canonical configuration (enough to re-run the producing command)
//   col_a,col_b,...
//   1.5,2.25,...
//
// Numbers are written in shortest round-trip form, so write -> read is bit-exact.

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qgalv/error.hpp"
#include "qgalv/kernel.hpp"
#include "qgalv/spectra.hpp"

namespace qgalv::io {

/// Shortest representation that parses back to the same double.
[[nodiscard]] inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

[[nodiscard]] inline double parse_double(std::string_view s, const std::string& what) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ValidationError(what + ": cannot parse number '" + std::string(s) + "'");
  return v;
}

[[nodiscard]] inline std::string join(const std::vector<double>& v, char sep = ' ') {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += format_double(v[i]);
  }
  return out;
}

[[nodiscard]] inline std::vector<double> split_doubles(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(parse_double(tok, what));
  return out;
}

struct Table {
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<std::string> config;  ///< canonical "[section] key = value" lines
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void set(const std::string& key, const std::string& value) {
    for (auto& kv : header)
      if (kv.first == key) {
        kv.second = value;
        return;
      }
    header.emplace_back(key, value);
  }
  void set(const std::string& key, double value) { set(key, format_double(value)); }

  [[nodiscard]] bool has(const std::string& key) const {
    for (const auto& kv : header)
      if (kv.first == key) return true;
    return false;
  }

  [[nodiscard]] const std::string& get(const std::string& key) const {
    for (const auto& kv : header)
      if (kv.first == key) return kv.second;
    throw ValidationError("table header has no '" + key + "'");
  }

  [[nodiscard]] double number(const std::string& key) const { return parse_double(get(key), "header " + key); }

  [[nodiscard]] std::size_t column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw ValidationError("table has no column '" + name + "'");
  }

  [[nodiscard]] std::vector<double> column(const std::string& name) const {
    const auto j = column_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[j]);
    return out;
  }
};

inline void write_csv(std::ostream& os, const Table& t) {
  os << "# qgalv-table 1\n";
  for (const auto& [k, v] : t.header) os << "# " << k << " = " << v << '\n';
  for (const auto& c : t.config) os << "# cfg " << c << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_double(r[i]);
    os << '\n';
  }
}

/// JSON rendering of the same content. Non-finite numbers become null.
inline void write_json(std::ostream& os, const Table& t) {
  nlohmann::ordered_json j;
  j["format"] = "qgalv-table 1";
  auto& h = j["header"];
  h = nlohmann::ordered_json::object();
  for (const auto& [k, v] : t.header) h[k] = v;
  j["config"] = t.config;
  j["columns"] = t.columns;
  auto& rows = j["rows"];
  rows = nlohmann::ordered_json::array();
  for (const auto& r : t.rows) {
    auto row = nlohmann::ordered_json::array();
    for (double x : r) {
      if (std::isfinite(x)) {
        row.push_back(x);
      } else {
        row.push_back(nullptr);
      }
    }
    rows.push_back(std::move(row));
  }
  os << j.dump(1) << '\n';
}

[[nodiscard]] inline Table read_csv(std::istream& is, const std::string& source = "table") {
  Table t;
  std::string line;
  bool have_columns = false;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      if (!body.empty() && body[0] == ' ') body.erase(0, 1);
      if (body.rfind("qgalv-table", 0) == 0) continue;
      if (body.rfind("cfg ", 0) == 0) {
        t.config.push_back(body.substr(4));
        continue;
      }
      const auto eq = body.find(" = ");
      if (eq != std::string::npos) t.header.emplace_back(body.substr(0, eq), body.substr(eq + 3));
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!have_columns) {
      t.columns = cells;
      have_columns = true;
      continue;
    }
    if (cells.size() != t.columns.size())
      throw ValidationError(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.columns.size()) +
                            " columns, found " + std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_double(c, source + ":" + std::to_string(lineno)));
    t.rows.push_back(std::move(row));
  }
  if (!have_columns) throw ValidationError(source + ": no column line");
  return t;
}

[[nodiscard]] inline Table read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return read_csv(in, path);
}

/// Kernel export: D~ on a grid plus everything needed to rebuild the kernel exactly.
[[nodiscard]] inline Table kernel_table(const ResponseKernel& k, std::span<const double> omega_grid) {
  Table t;
  t.set("kind", "kernel");
  t.set("mode", to_string(k.mode()));
  t.set("mu", k.mu());
  t.set("hbar", k.hbar());
  t.set("bandwidth", k.bandwidth());
  t.set("n_det", k.n_det());
  t.set("u0_sq", k.u0_sq());
  t.set("coupling_d0", k.coupling_d0());
  t.set("level_weights", join(k.level_weights()));
  t.set("provenance", k.provenance());
  t.columns = {"omega", "re_D", "im_D"};
  // D~ is real: D(-tau) = conj D(tau).
  for (double w : omega_grid) t.rows.push_back({w, k.freq(w), 0.0});
  return t;
}

[[nodiscard]] inline ResponseKernel kernel_from_table(const Table& t) {
  if (t.has("kind") && t.get("kind") != "kernel") throw ValidationError("not a kernel file (kind=" + t.get("kind") + ")");
  return ResponseKernel(kernel_mode_from_string(t.get("mode")), t.number("mu"), t.number("n_det"), t.number("u0_sq"),
                        t.number("hbar"), split_doubles(t.get("level_weights"), "level_weights"),
                        t.get("provenance"));
}

[[nodiscard]] inline Table scan_table(const ScanResult& s) {
  Table t;
  t.set("kind", "scan");
  t.set("T", s.T);
  t.set("regime", to_string(s.regime));
  t.set("kernel_mu", s.kernel_mu);
  t.set("provenance", s.provenance);
  for (std::size_t i = 0; i < s.warnings.size(); ++i) t.set("warning_" + std::to_string(i), s.warnings[i]);
  t.set("efficiency", s.efficiency);
  t.set("shots", static_cast<double>(s.counts.empty() ? 0 : s.shots));
  t.set("seed", std::to_string(s.seed));
  t.columns = {"omega", "b_offs", "mean_atoms"};
  const std::size_t shots = s.counts.empty() ? 0 : s.shots;
  for (std::size_t k = 0; k < shots; ++k) t.columns.push_back("count_" + std::to_string(k));
  for (std::size_t i = 0; i < s.omega.size(); ++i) {
    std::vector<double> row{s.omega[i], s.b_offs[i], s.mean_atoms[i]};
    for (std::size_t k = 0; k < shots; ++k) row.push_back(static_cast<double>(s.counts[i][k]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

[[nodiscard]] inline ScanResult scan_from_table(const Table& t) {
  if (t.has("kind") && t.get("kind") != "scan") throw ValidationError("not a scan file (kind=" + t.get("kind") + ")");
  ScanResult s;
  s.T = t.number("T");
  s.regime = regime_from_string(t.get("regime"));
  s.kernel_mu = t.has("kernel_mu") ? t.number("kernel_mu") : 0.0;
  s.provenance = t.has("provenance") ? t.get("provenance") : "";
  s.omega = t.column("omega");
  s.b_offs = t.column("b_offs");
  s.mean_atoms = t.column("mean_atoms");
  s.efficiency = t.has("efficiency") ? t.number("efficiency") : 1.0;
  s.seed = t.has("seed") ? std::stoull(t.get("seed")) : 0;
  const auto shots = t.has("shots") ? static_cast<std::size_t>(t.number("shots")) : 0;
  if (shots > 0) {
    s.shots = shots;
    s.counts.assign(s.omega.size(), std::vector<std::uint64_t>(shots));
    for (std::size_t k = 0; k < shots; ++k) {
      const auto col = t.column("count_" + std::to_string(k));
      for (std::size_t i = 0; i < col.size(); ++i) s.counts[i][k] = static_cast<std::uint64_t>(col[i]);
    }
  }
  return s;
}

}  // namespace qgalv::io
