// Batch front end: scenario file in, plot-ready tables out.
//
// Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 statistical test failed.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qgalv/config.hpp"
#include "qgalv/counting.hpp"
#include "qgalv/inversion.hpp"
#include "qgalv/io.hpp"
#include "qgalv/kernel.hpp"
#include "qgalv/oracle.hpp"
#include "qgalv/spectra.hpp"

#ifndef QGALV_VERSION
#define QGALV_VERSION "dev"
#endif

namespace {

using namespace qgalv;

constexpr int exit_validation = 2;
constexpr int exit_numerical = 3;
constexpr int exit_statistical = 4;

struct Common {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string format = "csv";
};

struct Run {
  config::Config cfg;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

Run load(const Common& c, const std::string& command) {
  Run r;
  r.cfg = config::Config::load(c.config);
  r.seed = c.seed ? *c.seed : r.cfg.integer("run", "seed", 0);
  r.threads = c.threads;
  r.cfg.set("run", "command", command);
  r.cfg.set("run", "seed", std::to_string(r.seed));
  return r;
}

void stamp(io::Table& t, const Run& r, const std::string& command) {
  t.set("command", command);
  t.set("version", QGALV_VERSION);
  t.config = r.cfg.canonical();
}

void write(const Common& c, const std::string& stem, const io::Table& t) {
  std::filesystem::create_directories(c.out);
  const auto path = std::filesystem::path(c.out) / (stem + (c.format == "json" ? ".json" : ".csv"));
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot write '" + path.string() + "'");
  if (c.format == "json") {
    io::write_json(os, t);
  } else {
    io::write_csv(os, t);
  }
  std::cout << "wrote " << path.string() << '\n';
}

/// Resolves "mu" units against the configured trap.
TrapConfig resolve_trap(Run& r) {
  const auto trap = config::trap_from(r.cfg);
  r.cfg.resolve_mu(chemical_potential(trap).mu, trap.constants.hbar);
  return trap;
}

void warn_all(const std::vector<std::string>& w) {
  for (const auto& s : w) std::cerr << "warning: " << s << '\n';
}

int cmd_kernel(const Common& c) {
  Run r = load(c, "kernel");
  const auto trap = resolve_trap(r);
  const auto wire = config::nanowire_from(r.cfg);
  warn_all(wire.validate());
  const auto opt = config::kernel_options_from(r.cfg, r.threads);
  const auto k = build_kernel(wire, trap, opt);
  if (k.is_zero()) std::cerr << "warning: N = 0 gives an identically zero kernel\n";

  const double bw = k.bandwidth();
  const auto points = r.cfg.integer("kernel", "points", 401);
  const double lo = r.cfg.number("kernel", "omega_min", -0.5 * bw);
  const double hi = r.cfg.number("kernel", "omega_max", 1.5 * bw);
  detail::require(points >= 2 && hi > lo, "kernel: grid needs points >= 2 and omega_max > omega_min");
  const auto grid = quad::linspace(lo, hi, points);
  if (!k.is_zero()) (void)kernel_freq(k, grid);

  auto t = io::kernel_table(k, grid);
  stamp(t, r, "kernel");
  write(c, "kernel", t);

  // Curve family in units of n_det against w = hbar omega / mu, one column per atom number.
  std::vector<double> sweep{trap.atom_number};
  if (r.cfg.has("kernel", "atoms_sweep")) sweep = io::split_doubles(r.cfg.text("kernel", "atoms_sweep"), "kernel.atoms_sweep");
  io::Table fam;
  fam.set("kind", "kernel_family");
  fam.columns = {"w", "approx1d"};
  const auto wgrid = quad::linspace(-0.5, 1.5, points);
  std::vector<std::vector<double>> cols;
  for (std::size_t s = 0; s < sweep.size(); ++s) {
    TrapConfig ts = trap;
    ts.atom_number = sweep[s];
    const auto ks = build_kernel(wire, ts, opt);
    const auto tf = chemical_potential(ts);
    const std::string tag = std::to_string(s);
    fam.set("atoms_" + tag, sweep[s]);
    fam.set("mu_" + tag, tf.mu);
    fam.set("c_" + tag, tf.c);
    fam.set("b_" + tag, tf.b);
    fam.set("n_det_" + tag, ks.n_det());
    fam.columns.push_back(to_string(opt.mode) + "_" + tag);
    std::vector<double> col;
    for (double w : wgrid) col.push_back(ks.is_zero() ? 0.0 : ks.level_density(w) / ks.n_det());
    cols.push_back(std::move(col));
  }
  for (std::size_t i = 0; i < wgrid.size(); ++i) {
    std::vector<double> row{wgrid[i], d_tilde(wgrid[i])};
    for (const auto& col : cols) row.push_back(col[i]);
    fam.rows.push_back(std::move(row));
  }
  stamp(fam, r, "kernel");
  write(c, "kernel_family", fam);

  std::cout << "mu = " << io::format_double(k.mu()) << " J\n"
            << "mu/hbar = " << io::format_double(bw) << " rad/s\n"
            << "U^2 = " << io::format_double(k.u0_sq()) << '\n'
            << "n_det = " << io::format_double(k.n_det()) << " A^-2 s^-2\n";
  return 0;
}

int cmd_scan(const Common& c) {
  Run r = load(c, "scan");
  const auto trap = resolve_trap(r);
  const auto wire = config::nanowire_from(r.cfg);
  warn_all(wire.validate());
  const auto k = build_kernel(wire, trap, config::kernel_options_from(r.cfg, r.threads));
  const auto model = config::model_from(r.cfg, trap.constants);
  const auto grid = config::scan_from(r.cfg, wire, trap.constants);
  auto result = scan(model, k, wire, trap.constants, grid.T, grid.omega, grid.regime, r.threads);
  for (double b : {result.b_offs.front(), result.b_offs.back()}) warn_all(larmor_warnings(b, trap.constants));
  warn_all(result.warnings);
  if (!r.cfg.keys("detection").empty()) result = simulate_counts(std::move(result), config::detection_from(r.cfg, r.seed));

  auto t = io::scan_table(result);
  // Asymmetry column when the grid is symmetric about zero.
  try {
    const auto a = asymmetry(result);
    t.columns.insert(t.columns.begin() + 3, "asymmetry");
    for (std::size_t i = 0; i < t.rows.size(); ++i) t.rows[i].insert(t.rows[i].begin() + 3, a[i]);
  } catch (const ValidationError&) {
  }
  stamp(t, r, "scan");
  write(c, "scan", t);
  return 0;
}

int cmd_oracle(const Common& c) {
  Run r = load(c, "oracle");
  const auto trap = resolve_trap(r);
  const auto wire = config::nanowire_from(r.cfg);
  warn_all(wire.validate());
  const auto model = config::model_from(r.cfg, trap.constants);
  const auto proc = process_for_model(model);
  const auto grid = config::scan_from(r.cfg, wire, trap.constants);
  const auto opt = config::oracle_from(r.cfg, r.seed, r.threads);
  const double z_max = r.cfg.number("oracle", "z_threshold", 3.0);

  KernelOptions ko = config::kernel_options_from(r.cfg, r.threads);
  ko.mode = opt.freeze_u ? KernelMode::Approx1D : KernelMode::Exact3D;
  const auto k = build_kernel(wire, trap, ko);
  // A finite trajectory is a finite measurement window: compare against the full regime.
  const auto analytic = scan(model, k, wire, trap.constants, grid.T, grid.omega, Regime::Full, r.threads);
  const auto mc = oracle_atom_count(proc, grid.omega, grid.T, wire, trap, opt);

  io::Table t;
  t.set("kind", "oracle");
  t.set("T", grid.T);
  t.set("ensemble", static_cast<double>(opt.ensemble));
  t.set("dt", mc.dt);
  t.set("steps", static_cast<double>(mc.steps));
  t.set("z_threshold", z_max);
  t.columns = {"omega", "analytic", "oracle", "std_error", "z"};
  double worst = 0;
  for (std::size_t i = 0; i < grid.omega.size(); ++i) {
    const auto& e = mc.estimates[i];
    const double diff = e.mean - analytic.mean_atoms[i];
    const double z = e.std_error > 0 ? diff / e.std_error : (diff == 0 ? 0.0 : std::copysign(INFINITY, diff));
    worst = std::max(worst, std::abs(z));
    t.rows.push_back({grid.omega[i], analytic.mean_atoms[i], e.mean, e.std_error, z});
  }
  t.set("max_abs_z", worst);
  stamp(t, r, "oracle");
  write(c, "oracle", t);
  std::cout << "max |z| = " << io::format_double(worst) << " (threshold " << io::format_double(z_max) << ")\n";
  return worst <= z_max ? 0 : exit_statistical;
}

int cmd_invert(const Common& c, const std::string& scan_path, const std::string& kernel_path) {
  Run r = load(c, "invert");
  if (!scan_path.empty()) r.cfg.set("inversion", "scan", scan_path);
  if (!kernel_path.empty()) r.cfg.set("inversion", "kernel", kernel_path);
  const auto s = io::scan_from_table(io::read_csv_file(r.cfg.text("inversion", "scan")));
  const auto k = io::kernel_from_table(io::read_csv_file(r.cfg.text("inversion", "kernel")));
  if (s.kernel_mu > 0 && std::abs(k.mu() / s.kernel_mu - 1) > 1e-12)
    throw ValidationError("invert: the scan was produced with a different kernel (mu " + io::format_double(s.kernel_mu) +
                          " J vs " + io::format_double(k.mu()) + " J in the kernel file)");
  r.cfg.resolve_mu(k.mu(), k.hbar());
  detail::require(s.omega.size() >= 3, "invert: scan needs at least three points");
  const double h = s.omega[1] - s.omega[0];
  const double bw = k.bandwidth();
  const double lo = r.cfg.number("inversion", "omega_min", s.omega.front() - bw);
  const double hi = r.cfg.number("inversion", "omega_max", s.omega.back());
  detail::require(hi > lo, "inversion: omega_max must exceed omega_min");
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / h)) + 1;
  const auto wgrid = quad::linspace(lo, lo + h * static_cast<double>(n - 1), n);

  InverseProblem p;
  p.K = build_kernel_matrix(wgrid, s.omega, k, s.T, s.regime);
  p.data.resize(static_cast<Eigen::Index>(s.omega.size()));
  p.sigma.resize(p.data.size());
  if (s.shots >= 2) {
    const auto est = estimate_means(s);
    for (std::size_t i = 0; i < est.size(); ++i) {
      p.data(static_cast<Eigen::Index>(i)) = est[i].mean;
      // All-zero counts give a zero sample error; one count over all shots is the resolution.
      p.sigma(static_cast<Eigen::Index>(i)) =
          std::max(est[i].std_error, 1.0 / (s.efficiency * static_cast<double>(s.shots)));
    }
  } else {
    const double rel = r.cfg.number("inversion", "sigma_rel", 1e-3);
    detail::require(rel > 0, "inversion.sigma_rel must be positive");
    double peak = 0;
    for (double v : s.mean_atoms) peak = std::max(peak, std::abs(v));
    for (std::size_t i = 0; i < s.mean_atoms.size(); ++i) {
      p.data(static_cast<Eigen::Index>(i)) = s.mean_atoms[i];
      p.sigma(static_cast<Eigen::Index>(i)) = rel * std::abs(s.mean_atoms[i]) + 1e-6 * peak;
    }
  }
  DeconvolveOptions opt;
  if (r.cfg.has("inversion", "lambda")) opt.lambda = r.cfg.number("inversion", "lambda");
  opt.regularizer = regularizer_from_string(r.cfg.text("inversion", "regularizer", "identity"));
  opt.nonnegative = r.cfg.flag("inversion", "nonnegative", false);
  opt.discrepancy_factor = r.cfg.number("inversion", "discrepancy", 1.0);
  const auto rec = deconvolve(p, opt);
  const auto& d = rec.diagnostics;

  io::Table t;
  t.set("kind", "reconstruction");
  t.set("lambda", d.lambda);
  t.set("residual_norm", d.residual_norm);
  t.set("solution_norm", d.solution_norm);
  t.set("chi2", d.chi2);
  t.set("n_data", static_cast<double>(p.data.size()));
  t.set("condition", d.condition);
  t.set("discrepancy_met", d.discrepancy_met ? "true" : "false");
  t.set("iterations", static_cast<double>(d.iterations));
  t.columns = {"omega", "S"};
  for (std::size_t j = 0; j < wgrid.size(); ++j) t.rows.push_back({wgrid[j], rec.spectrum(static_cast<Eigen::Index>(j))});
  stamp(t, r, "invert");
  write(c, "reconstruction", t);

  if (r.cfg.has("inversion", "lambda_scan")) {
    const auto lams = io::split_doubles(r.cfg.text("inversion", "lambda_scan"), "inversion.lambda_scan");
    const auto rows = lambda_scan(p, lams, opt);
    io::Table lc;
    lc.set("kind", "lcurve");
    lc.set("corner_lambda", rows[lcurve_corner(rows)].lambda);
    lc.columns = {"lambda", "residual_norm", "solution_norm"};
    for (const auto& row : rows) lc.rows.push_back({row.lambda, row.residual_norm, row.solution_norm});
    stamp(lc, r, "invert");
    write(c, "lcurve", lc);
  }
  std::cout << "lambda = " << io::format_double(d.lambda) << ", chi2 = " << io::format_double(d.chi2) << " for "
            << p.data.size() << " points\n";
  if (!d.discrepancy_met) {
    std::cerr << "discrepancy principle not met: chi2 exceeds the target even at the smallest lambda\n";
    return exit_statistical;
  }
  return 0;
}

int cmd_estimate(const Common& c) {
  Run r = load(c, "estimate");
  const auto trap = resolve_trap(r);
  const auto wire = config::nanowire_from(r.cfg);
  warn_all(wire.validate());
  const double T = r.cfg.number("scan", "T", 1.0);
  const auto k = build_kernel(wire, trap, {});
  const double rms = sensitivity_estimate(k, T);
  io::Table t;
  t.set("kind", "estimate");
  t.columns = {"T", "u0_sq", "n_det", "mu", "bandwidth", "rms_current"};
  t.rows.push_back({T, k.u0_sq(), k.n_det(), k.mu(), k.bandwidth(), rms});
  stamp(t, r, "estimate");
  write(c, "estimate", t);
  std::cout << "U^2 = " << io::format_double(k.u0_sq()) << '\n'
            << "n_det = " << io::format_double(k.n_det()) << " A^-2 s^-2\n"
            << "mu = " << io::format_double(k.mu()) << " J (mu/hbar = " << io::format_double(k.bandwidth())
            << " rad/s)\n"
            << "sqrt<I^2> at N_long = 1: " << io::format_double(rms) << " A\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum galvanometer simulator: kernels, scans, oracle checks and deconvolution"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config, "scenario file (or any output file, to re-run it)");
  app.add_option("--out", common.out, "output directory");
  app.add_option("--seed", common.seed, "master seed (overrides run.seed)");
  app.add_option("--threads", common.threads, "worker threads")->check(CLI::Range(1u, 1024u));
  app.add_option("--format", common.format, "output format")->check(CLI::IsMember({"csv", "json"}));

  auto* kernel = app.add_subcommand("kernel", "response kernel D~ and the curve family over atoms_sweep");
  auto* scan_cmd = app.add_subcommand("scan", "forward map N(Omega), optionally with simulated counts");
  auto* oracle = app.add_subcommand("oracle", "Monte-Carlo trajectories vs the analytic forward map");
  auto* invert = app.add_subcommand("invert", "deconvolve a scan file against a kernel file");
  auto* estimate = app.add_subcommand("estimate", "rms current detectable at one transferred atom");
  std::string scan_path, kernel_path;
  invert->add_option("--scan", scan_path, "scan file (overrides inversion.scan)");
  invert->add_option("--kernel", kernel_path, "kernel file (overrides inversion.kernel)");
  for (auto* sub : {kernel, scan_cmd, oracle, invert, estimate}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    (void)app.exit(e);
    return exit_validation;
  }
  try {
    if (common.config.empty()) throw ValidationError("--config is required");
    if (*kernel) return cmd_kernel(common);
    if (*scan_cmd) return cmd_scan(common);
    if (*oracle) return cmd_oracle(common);
    if (*invert) return cmd_invert(common, scan_path, kernel_path);
    if (*estimate) return cmd_estimate(common);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_validation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return exit_numerical;
  }
  return exit_validation;
}
