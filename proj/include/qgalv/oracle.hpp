#pragma once

// Brute-force check of the forward map: classical current trajectories drive the condensate
// directly and the transferred atom number is averaged over an ensemble.
//
//   psi0(r, T) = int_0^T dt eta(r) I(T - t) e^{-i Delta(r) t},   N = int |psi0|^2 d^3r
//
// Delta depends on r only through V_T, which is constant on each radial shell of the
// stretched-coordinate quadrature grid, so psi0 = eta(r) J(shell) and
// N = sum_shell |J|^2 sum_{nodes in shell} w |eta|^2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "qgalv/condensate.hpp"
#include "qgalv/constants.hpp"
#include "qgalv/error.hpp"
#include "qgalv/nanowire.hpp"
#include "qgalv/parallel.hpp"
#include "qgalv/random.hpp"
#include "qgalv/spectra.hpp"

namespace qgalv {

namespace process {

/// I(t) = amplitude cos(omega0 t + phase), phase uniform on [0, 2 pi).
struct SinusoidRandomPhase {
  double amplitude = 0;  ///< I0 [A]
  double omega0 = 0;     ///< [rad/s]
};

/// Stationary Ornstein-Uhlenbeck current, <I(0) I(tau)> = rms^2 e^{-|tau|/tau_c}.
struct OrnsteinUhlenbeck {
  double rms = 0;              ///< [A]
  double correlation_time = 1;  ///< [s]
};

/// Band-limited white noise: S = density for |w| < cutoff. Realized as a sum of random-phase
/// cosines on a uniform frequency comb.
struct BandLimitedWhite {
  double density = 0;  ///< [A^2 s]
  double cutoff = 1;   ///< [rad/s]
};

}  // namespace process

using CurrentProcess =
    std::variant<process::SinusoidRandomPhase, process::OrnsteinUhlenbeck, process::BandLimitedWhite>;

/// Spectrum with the same second-order statistics as the process.
[[nodiscard]] inline NoiseSpectrumModel equivalent_spectrum(const CurrentProcess& p) {
  return std::visit(
      [](const auto& v) -> NoiseSpectrumModel {
        using P = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<P, process::SinusoidRandomPhase>) {
          return NoiseSpectrumModel::line(v.omega0, 0.5 * v.amplitude * v.amplitude, true);
        } else if constexpr (std::is_same_v<P, process::OrnsteinUhlenbeck>) {
          return NoiseSpectrumModel::lorentzian(0.0, 1.0 / v.correlation_time, v.rms * v.rms);
        } else {
          return NoiseSpectrumModel::band(v.density, v.cutoff);
        }
      },
      p);
}

/// Classical process realizing a symmetric spectrum model. Asymmetric models are rejected.
[[nodiscard]] inline CurrentProcess process_for_model(const NoiseSpectrumModel& m) {
  if (!m.is_classical())
    throw ValidationError("oracle: spectrum is not symmetric in omega; classical current trajectories cannot "
                          "realize S(w) != S(-w)");
  const auto& v = m.variant();
  if (const auto* l = std::get_if<spectrum::Lorentzian>(&v))
    return process::OrnsteinUhlenbeck{std::sqrt(l->power), 1.0 / l->gamma};
  if (const auto* l = std::get_if<spectrum::Line>(&v))
    return process::SinusoidRandomPhase{std::sqrt(2 * l->weight), l->omega0};
  if (const auto* b = std::get_if<spectrum::Band>(&v)) return process::BandLimitedWhite{b->density, b->cutoff};
  throw ValidationError("oracle: no trajectory generator for model " + m.kind() +
                        " (supported: lorentzian centred at 0, symmetric line, band)");
}

/// Shortest time scale of the process [s]: correlation time or period.
[[nodiscard]] inline double process_time_scale(const CurrentProcess& p) {
  return std::visit(
      [](const auto& v) -> double {
        using P = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<P, process::SinusoidRandomPhase>) {
          return v.omega0 != 0 ? 2 * pi / std::abs(v.omega0) : std::numeric_limits<double>::infinity();
        } else if constexpr (std::is_same_v<P, process::OrnsteinUhlenbeck>) {
          return v.correlation_time;
        } else {
          return 2 * pi / v.cutoff;
        }
      },
      p);
}

/// steps + 1 samples I(n dt), n = 0..steps. Deterministic in `seed`. For band-limited noise
/// the comb spacing is pi / (16 steps dt), fine enough that the comb is indistinguishable
/// from the continuum over the trajectory length.
[[nodiscard]] inline std::vector<double> sample_current(const CurrentProcess& p, double dt, std::size_t steps,
                                                        std::uint64_t seed) {
  detail::require(dt > 0 && steps >= 1, "sample_current: dt must be > 0 and steps >= 1");
  if (dt * 20 > process_time_scale(p) * (1 + 1e-12))
    throw ValidationError("sample_current: dt must resolve the process time scale with >= 20 samples");
  boost::random::mt19937_64 rng(seed);
  std::vector<double> out(steps + 1, 0.0);
  std::visit(
      [&](const auto& v) {
        using P = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<P, process::SinusoidRandomPhase>) {
          boost::random::uniform_real_distribution<double> phase(0.0, 2 * pi);
          const double ph = phase(rng);
          for (std::size_t n = 0; n <= steps; ++n)
            out[n] = v.amplitude * std::cos(v.omega0 * dt * static_cast<double>(n) + ph);
        } else if constexpr (std::is_same_v<P, process::OrnsteinUhlenbeck>) {
          boost::random::normal_distribution<double> gauss(0.0, 1.0);
          const double decay = std::exp(-dt / v.correlation_time);
          const double kick = v.rms * std::sqrt(1 - decay * decay);
          out[0] = v.rms * gauss(rng);
          for (std::size_t n = 1; n <= steps; ++n) out[n] = decay * out[n - 1] + kick * gauss(rng);
        } else {
          const double spacing = pi / (16.0 * static_cast<double>(steps) * dt);
          const auto modes = static_cast<std::size_t>(std::ceil(v.cutoff / spacing));
          const double dw = v.cutoff / static_cast<double>(modes);
          const double amp = std::sqrt(2 * v.density * dw / pi);
          boost::random::uniform_real_distribution<double> phase(0.0, 2 * pi);
          for (std::size_t k = 0; k < modes; ++k) {
            const double w = (static_cast<double>(k) + 0.5) * dw;
            const double ph = phase(rng);
            // Rotate a phasor instead of calling cos for every sample.
            const std::complex<double> step = std::polar(1.0, w * dt);
            std::complex<double> z = std::polar(amp, ph);
            for (std::size_t n = 0; n <= steps; ++n) {
              out[n] += z.real();
              z *= step;
            }
          }
        }
      },
      p);
  return out;
}

/// Quadrature nodes with their psi0 amplitudes at time T.
struct FieldSnapshot {
  std::vector<QuadratureNode> nodes;
  std::vector<std::complex<double>> psi0;  ///< [m^-3/2]

  /// sum_nodes w |psi0|^2
  [[nodiscard]] double atom_number() const {
    double n = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) n += nodes[i].weight * std::norm(psi0[i]);
    return n;
  }
};

/// Trapezoidal int_0^T dt I(T - t) e^{-i delta t} for samples I(n dt), n = 0..steps.
[[nodiscard]] inline std::complex<double> drive_integral(std::span<const double> trajectory, double dt,
                                                         double delta) {
  const std::size_t steps = trajectory.size() - 1;
  const std::complex<double> rot = std::polar(1.0, -delta * dt);
  std::complex<double> phase{1.0, 0.0};
  std::complex<double> sum{0.0, 0.0};
  for (std::size_t n = 0; n <= steps; ++n) {
    const double w = (n == 0 || n == steps) ? 0.5 : 1.0;
    sum += w * trajectory[steps - n] * phase;
    phase *= rot;
  }
  return dt * sum;
}

/// psi0(r, T) at every node for one trajectory sampled at spacing dt over [0, T].
[[nodiscard]] inline FieldSnapshot evolve_psi0(std::span<const double> trajectory, double dt,
                                               std::vector<QuadratureNode> nodes, double omega, double T,
                                               const NanowireConfig& cfg, const TrapConfig& trap) {
  detail::require(trajectory.size() >= 2, "evolve_psi0: trajectory needs at least two samples");
  const double span = dt * static_cast<double>(trajectory.size() - 1);
  if (std::abs(span - T) > 1e-9 * T)
    throw ValidationError("evolve_psi0: trajectory length times dt must equal T");
  const auto tf = chemical_potential(trap);
  FieldSnapshot snap;
  snap.psi0.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto eta = driving_amplitude(nodes[i].position, cfg, tf, trap);
    if (eta == std::complex<double>{0.0, 0.0}) continue;
    snap.psi0[i] = eta * drive_integral(trajectory, dt, detuning(nodes[i].position, omega, trap));
  }
  snap.nodes = std::move(nodes);
  return snap;
}

struct OracleOptions {
  std::size_t ensemble = 10000;
  double dt = 0;  ///< 0: largest step meeting the resolution rules
  std::size_t n_rho = 24;
  std::size_t n_theta = 24;
  std::size_t n_phi = 48;
  bool freeze_u = false;  ///< hold U at U(0), matching the Approx1D kernel
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct OracleEstimate {
  double mean = 0;
  double std_error = 0;
};

struct OracleResult {
  std::vector<double> omega;
  std::vector<OracleEstimate> estimates;
  double dt = 0;
  std::size_t steps = 0;
};

/// Time step used by the oracle: >= 20 samples per process time scale and a detuning
/// phase of at most 0.25 rad per step.
[[nodiscard]] inline std::size_t oracle_steps(const CurrentProcess& p, double T, double max_detuning, double dt) {
  if (dt > 0) {
    const double n = T / dt;
    const auto steps = static_cast<std::size_t>(std::llround(n));
    if (steps < 1 || std::abs(n - static_cast<double>(steps)) > 1e-9 * n)
      throw ValidationError("oracle: T must be an integer multiple of dt");
    return steps;
  }
  const double limit = std::min(process_time_scale(p) / 20.0, 0.25 / max_detuning);
  return static_cast<std::size_t>(std::ceil(T / limit));
}

/// Ensemble mean +- standard error of the transferred atom number at each Omega.
/// The same trajectories are reused at every Omega.
[[nodiscard]] inline OracleResult oracle_atom_count(const CurrentProcess& p, std::span<const double> omega_grid,
                                                    double T, const NanowireConfig& cfg, const TrapConfig& trap,
                                                    const OracleOptions& opt) {
  detail::require(T > 0, "oracle: T must be positive");
  detail::require(opt.ensemble >= 2, "oracle: ensemble needs at least two members");
  detail::require(!omega_grid.empty(), "oracle: empty Omega grid");
  (void)cfg.validate();
  trap.validate();
  const auto tf = chemical_potential(trap);
  double omax = 0;
  for (double o : omega_grid) omax = std::max(omax, std::abs(o));
  const double max_detuning = omax + tf.mu / trap.constants.hbar;

  OracleResult res;
  res.omega.assign(omega_grid.begin(), omega_grid.end());
  res.steps = oracle_steps(p, T, max_detuning, opt.dt);
  res.dt = T / static_cast<double>(res.steps);
  res.estimates.assign(omega_grid.size(), {});
  if (trap.atom_number == 0) return res;

  // Per-shell coupling sum_{nodes in shell} w |eta|^2 and detuning.
  const auto nodes = tf_quadrature_nodes(tf, opt.n_rho, opt.n_theta, opt.n_phi);
  std::vector<double> shell_weight(opt.n_rho, 0.0);
  std::vector<double> shell_potential(opt.n_rho, 0.0);
  const double p0 = drive_prefactor(cfg, trap.constants);
  const double u0_sq = std::norm(u_at_centre(cfg));
  std::vector<double> node_weight(nodes.size());
  parallel_for(nodes.size(), opt.threads, [&](std::size_t i) {
    const auto& nd = nodes[i];
    const double dens = tf_density(nd.position, tf, trap);
    node_weight[i] = opt.freeze_u ? nd.weight * dens * p0 * p0 * u0_sq
                                  : nd.weight * std::norm(driving_amplitude(nd.position, cfg, tf, trap));
  });
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    shell_weight[nodes[i].shell] += node_weight[i];
    shell_potential[nodes[i].shell] = trap_potential(nodes[i].position, trap);
  }

  // Phasors e^{-i Delta n dt} are rotated on the fly inside drive_integral.
  const std::size_t n_omega = omega_grid.size();
  std::vector<std::vector<double>> samples(n_omega, std::vector<double>(opt.ensemble, 0.0));
  parallel_for(opt.ensemble, opt.threads, [&](std::size_t m) {
    const auto traj = sample_current(p, res.dt, res.steps, member_seed(opt.seed, m));
    for (std::size_t j = 0; j < n_omega; ++j) {
      double n = 0;
      for (std::size_t s = 0; s < opt.n_rho; ++s) {
        const double delta = omega_grid[j] - shell_potential[s] / trap.constants.hbar;
        n += shell_weight[s] * std::norm(drive_integral(traj, res.dt, delta));
      }
      samples[j][m] = n;
    }
  });

  const auto m = static_cast<double>(opt.ensemble);
  for (std::size_t j = 0; j < n_omega; ++j) {
    double mean = 0;
    for (double v : samples[j]) mean += v;
    mean /= m;
    double var = 0;
    for (double v : samples[j]) var += (v - mean) * (v - mean);
    var /= (m - 1);
    res.estimates[j] = {mean, std::sqrt(var / m)};
  }
  return res;
}

}  // namespace qgalv
