#pragma once

// Spectral resolution machinery.
//
// Fourier convention (matches the noise spectrum definition):
//   S(w) = int dtau e^{+i w tau} <I(0) I(tau)>,   <I(0) I(tau)> = (1/2pi) int dw S(w) e^{-i w tau}.
//
// Level-density form of the coupling kernel. In stretched ellipsoidal coordinates the trap
// potential is V_T = mu rho^2, so with w = rho^2
//   D(tau) = int d^3r |eta(r)|^2 e^{-i tau V_T/hbar}
//          = N P^2 int_0^1 dw  d(w) A(w) e^{-i tau w mu/hbar},
//   d(w)   = (15/4) sqrt(w) (1 - w),
// where P is the drive prefactor and A(w) the angular average of |U|^2 over the shell
// rho = sqrt(w). The level density p(v) = (15/4) mu^{-5/2} sqrt(v) (mu - v) follows from
// (mu - v)/g weighting the shell volume dVol/dv ~ sqrt(v). Approx1D freezes A = |U(0)|^2,
// giving D(tau) = n_det int d(w) e^{-i tau w mu/hbar} dw, D(0) = n_det.
// The transform is then D~(w) = 2 pi (hbar/mu) N P^2 d(hbar w/mu) A(hbar w/mu), supported on
// [0, mu/hbar], and the long-time atom number is N(Omega) = (T/2pi) int dw S(w) D~(Omega - w).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qgalv/condensate.hpp"
#include "qgalv/constants.hpp"
#include "qgalv/error.hpp"
#include "qgalv/nanowire.hpp"
#include "qgalv/parallel.hpp"
#include "qgalv/quadrature.hpp"

namespace qgalv {

enum class KernelMode { Approx1D, Exact3D };

[[nodiscard]] inline std::string to_string(KernelMode m) {
  return m == KernelMode::Approx1D ? "approx1d" : "exact3d";
}

[[nodiscard]] inline KernelMode kernel_mode_from_string(const std::string& s) {
  if (s == "approx1d") return KernelMode::Approx1D;
  if (s == "exact3d") return KernelMode::Exact3D;
  throw ValidationError("unknown kernel mode '" + s + "' (expected approx1d or exact3d)");
}

/// d(w) = (15/4) sqrt(w) (1 - w) on [0, 1], zero elsewhere; unit integral, peak 5/(2 sqrt3) at w = 1/3.
[[nodiscard]] inline double d_tilde(double w) {
  if (!(w >= 0.0) || w > 1.0) return 0.0;
  return 3.75 * std::sqrt(w) * (1.0 - w);
}

/// U at the condensate centre, the value used by the frozen-geometry approximation.
[[nodiscard]] inline std::complex<double> u_at_centre(const NanowireConfig& cfg) {
  return u_factor(wire_frame({0.0, 0.0, 0.0}, cfg), cfg.length / cfg.distance);
}

/// n_det = [mu_0 mu_B a / (16 pi sqrt2 hbar y0^2)]^2 |U(0)|^2 N   [A^-2 s^-2]
[[nodiscard]] inline double n_det(const NanowireConfig& cfg, const TrapConfig& trap) {
  const double p = drive_prefactor(cfg, trap.constants);
  return p * p * std::norm(u_at_centre(cfg)) * trap.atom_number;
}

/// f(tau) = 1 - |tau|/T inside the measurement window, zero outside.
[[nodiscard]] inline double window(double T, double tau) {
  const double a = std::abs(tau);
  return a <= T ? 1.0 - a / T : 0.0;
}

/// Fourier transform of the triangular window: T [sin(w T/2) / (w T/2)]^2  [s]
[[nodiscard]] inline double window_ft(double T, double omega) {
  if (!(T > 0)) throw ValidationError("window_ft: measurement time must be positive");
  const double x = 0.5 * omega * T;
  if (std::abs(x) < 1e-4) return T * (1.0 - x * x / 3.0);
  const double s = std::sin(x) / x;
  return T * s * s;
}

/// Table abscissae s = sqrt(w) = 1 - (1 - t)^2 on uniform t in [0, 1]. Dense towards the
/// cloud surface, where the shell comes closest to the wire.
[[nodiscard]] inline std::vector<double> level_grid(std::size_t n) {
  auto t = quad::linspace(0.0, 1.0, n);
  for (double& v : t) v = 1.0 - (1.0 - v) * (1.0 - v);
  t.back() = 1.0;
  return t;
}

struct KernelOptions {
  KernelMode mode = KernelMode::Approx1D;
  std::size_t level_points = 129;  ///< samples of the shell-averaged |U|^2, see level_grid
  double angular_tol = 1e-6;       ///< relative tolerance of each angular average
  double u_tol = 1e-8;             ///< relative tolerance of U itself
  unsigned threads = 1;
};

/// Immutable response kernel of one condensate/wire configuration.
class ResponseKernel {
 public:
  ResponseKernel() = default;

  /// Builds a kernel from its level-density data. `level_weights` holds the shell-averaged
  /// |U|^2 / |U(0)|^2 on level_grid(size); empty means frozen geometry.
  ResponseKernel(KernelMode mode, double mu, double n_det, double u0_sq, double hbar,
                 std::vector<double> level_weights, std::string provenance)
      : mode_(mode),
        mu_(mu),
        n_det_(n_det),
        u0_sq_(u0_sq),
        hbar_(hbar),
        level_(std::move(level_weights)),
        provenance_(std::move(provenance)) {
    detail::require(mu >= 0 && n_det >= 0 && hbar > 0, "kernel: mu and n_det must be non-negative");
    detail::require(level_.empty() || level_.size() >= 2, "kernel: level table needs >= 2 points");
    for (double a : level_) detail::require(a >= 0 && std::isfinite(a), "kernel: negative level weight");
    if (mode_ == KernelMode::Approx1D) level_.clear();
    edges_ = level_.empty() ? quad::linspace(0.0, 1.0, 17) : level_grid(level_.size());
    const auto rule = level_rule(0.0);
    d0_ = 0.0;
    double first = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double s = rule.nodes[i];
      const double v = rule.weights[i] * level_integrand(s);
      d0_ += v;
      first += v * s * s;
    }
    centroid_ = d0_ > 0 ? first / d0_ : 0.0;
    d0_ *= n_det_;
  }

  [[nodiscard]] KernelMode mode() const { return mode_; }
  [[nodiscard]] double mu() const { return mu_; }
  [[nodiscard]] double n_det() const { return n_det_; }
  [[nodiscard]] double u0_sq() const { return u0_sq_; }
  [[nodiscard]] double hbar() const { return hbar_; }
  [[nodiscard]] const std::vector<double>& level_weights() const { return level_; }
  [[nodiscard]] const std::string& provenance() const { return provenance_; }
  [[nodiscard]] bool is_zero() const { return mu_ <= 0 || n_det_ <= 0; }

  /// mu / hbar [rad/s]
  [[nodiscard]] double bandwidth() const { return mu_ / hbar_; }

  /// D(0) = int |eta|^2 d^3r  [A^-2 s^-2]
  [[nodiscard]] double coupling_d0() const { return d0_; }

  /// Mean of w = V_T/mu under the kernel weight (3/7 for frozen geometry).
  [[nodiscard]] double centroid() const { return centroid_; }

  /// Shell-averaged |U|^2 relative to |U(0)|^2 at rho = sqrt(w) = s.
  [[nodiscard]] double level_weight_at(double s) const {
    if (level_.empty()) return 1.0;
    s = std::clamp(s, 0.0, 1.0);
    const double pos = (1.0 - std::sqrt(1.0 - s)) * static_cast<double>(level_.size() - 1);
    const auto i = std::min(static_cast<std::size_t>(pos), level_.size() - 2);
    const double t = pos - static_cast<double>(i);
    return (1 - t) * level_[i] + t * level_[i + 1];
  }

  /// q(w) = n_det d(w) A(w)/|U(0)|^2: the kernel weight per unit w  [A^-2 s^-2]
  [[nodiscard]] double level_density(double w) const {
    if (is_zero() || !(w >= 0.0) || w > 1.0) return 0.0;
    return n_det_ * d_tilde(w) * level_weight_at(std::sqrt(w));
  }

  /// D~(w) = 2 pi (hbar/mu) q(hbar w / mu)  [A^-2 s^-1]
  [[nodiscard]] double freq(double omega) const {
    if (is_zero()) return 0.0;
    return 2 * pi / bandwidth() * level_density(omega / bandwidth());
  }

  /// D(tau), complex, Hermitian: D(-tau) = conj D(tau).
  [[nodiscard]] std::complex<double> time(double tau) const {
    if (is_zero()) return {0.0, 0.0};
    const double theta = tau * bandwidth();
    const auto rule = level_rule(theta);
    std::complex<double> sum{0.0, 0.0};
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double s = rule.nodes[i];
      const double phase = -theta * s * s;
      sum += rule.weights[i] * level_integrand(s) * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    return n_det_ * sum;
  }

  /// Composite rule over s = sqrt(w) in [0, 1], aligned with the level table and fine
  /// enough that the phase theta s^2 changes by less than ~1 rad per panel.
  [[nodiscard]] quad::Rule level_rule(double theta) const {
    return rule_for(static_cast<std::size_t>(std::ceil(2.0 * std::abs(theta))));
  }

  /// Rule on the table intervals with at least `panels` panels in total.
  [[nodiscard]] quad::Rule rule_for(std::size_t panels) const {
    const std::size_t intervals = edges_.size() - 1;
    const std::size_t sub = std::max<std::size_t>(1, (panels + intervals - 1) / intervals);
    return quad::composite_on(edges_, sub);
  }

  /// d(s^2) A(s) 2s, the integrand in s = sqrt(w) (without the n_det factor).
  [[nodiscard]] double level_integrand(double s) const {
    return 7.5 * s * s * (1 - s * s) * level_weight_at(s);
  }

 private:
  KernelMode mode_ = KernelMode::Approx1D;
  double mu_ = 0;
  double n_det_ = 0;
  double u0_sq_ = 0;
  double hbar_ = PhysicalConstants{}.hbar;
  std::vector<double> level_;
  std::vector<double> edges_;
  std::string provenance_;
  double d0_ = 0;
  double centroid_ = 0;
};

/// Angular average of |U|^2 / |U(0)|^2 over the ellipsoidal shell rho = s.
[[nodiscard]] inline double shell_average(double s, const NanowireConfig& cfg, const CondensateTF& tf,
                                          double u0_sq, const KernelOptions& opt) {
  const double len = cfg.length / cfg.distance;
  auto u2 = [&](double ct, double phi) {
    const Vec3 r = ellipsoid_point(tf, s, ct, phi);
    return std::norm(u_factor(wire_frame(r, cfg), len, opt.u_tol));
  };
  if (s == 0.0) return u2(1.0, 0.0) / u0_sq;
  // |U|^2 is even in x (phi -> pi - phi); with a centred wire it is also even in z.
  const bool z_mirror = cfg.z_offset == 0.0;
  const double ct_lo = z_mirror ? 0.0 : -1.0;
  auto inner = [&](double ct) {
    auto f = [&](double phi) { return u2(ct, phi); };
    return quad::adaptive(f, -0.5 * pi, 0.5 * pi, opt.angular_tol).value;
  };
  const double total = quad::adaptive(inner, ct_lo, 1.0, opt.angular_tol).value;
  // Full sphere measure is 4 pi: the phi half-range covers 2 pi / 2, the ct half-range 2 / 2.
  const double measure = (1.0 - ct_lo) * pi;
  return total / measure / u0_sq;
}

/// Builds the Approx1D or Exact3D response kernel. N = 0 gives an identically zero kernel.
[[nodiscard]] inline ResponseKernel build_kernel(const NanowireConfig& cfg, const TrapConfig& trap,
                                                 const KernelOptions& opt = {}) {
  (void)cfg.validate();
  trap.validate();
  const auto tf = chemical_potential(trap);
  const double u0_sq = std::norm(u_at_centre(cfg));
  const double nd = n_det(cfg, trap);
  std::string prov = "mode=" + to_string(opt.mode);
  if (trap.atom_number == 0 || u0_sq == 0) {
    return ResponseKernel(opt.mode, tf.mu, 0.0, u0_sq, trap.constants.hbar, {}, prov + ";zero");
  }
  std::vector<double> level;
  if (opt.mode == KernelMode::Exact3D) {
    detail::require(opt.level_points >= 3, "kernel.level_points must be >= 3");
    level.resize(opt.level_points);
    const auto grid = level_grid(opt.level_points);
    parallel_for(grid.size(), opt.threads,
                 [&](std::size_t i) { level[i] = shell_average(grid[i], cfg, tf, u0_sq, opt); });
    prov += ";level_points=" + std::to_string(opt.level_points);
  }
  return ResponseKernel(opt.mode, tf.mu, nd, u0_sq, trap.constants.hbar, std::move(level), prov);
}

/// D(tau) of a built kernel.
[[nodiscard]] inline std::complex<double> kernel_time(const ResponseKernel& k, double tau) {
  return k.time(tau);
}

/// D~ sampled on a frequency grid [rad/s]. The grid must span [-0.5, 1.5] mu/hbar and
/// resolve mu/hbar with at least eight samples.
[[nodiscard]] inline std::vector<double> kernel_freq(const ResponseKernel& k,
                                                     std::span<const double> omega_grid) {
  std::vector<double> out(omega_grid.size(), 0.0);
  if (k.is_zero()) return out;
  detail::require(omega_grid.size() >= 2, "kernel_freq: grid needs at least two points");
  const double bw = k.bandwidth();
  detail::require(omega_grid.front() <= -0.5 * bw && omega_grid.back() >= 1.5 * bw,
                  "kernel_freq: grid must span [-0.5, 1.5] mu/hbar");
  for (std::size_t i = 1; i < omega_grid.size(); ++i)
    detail::require(omega_grid[i] - omega_grid[i - 1] <= bw / 8,
                    "kernel_freq: grid too coarse to resolve the mu/hbar cutoff");
  for (std::size_t i = 0; i < omega_grid.size(); ++i) out[i] = k.freq(omega_grid[i]);
  return out;
}

/// Transform of f(tau) D(tau) at one frequency: int_0^1 dw q(w) window_ft(T, nu - w mu/hbar).
[[nodiscard]] inline double resolution_at(const ResponseKernel& k, double T, double nu,
                                          const quad::Rule& rule) {
  if (k.is_zero()) return 0.0;
  const double bw = k.bandwidth();
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double s = rule.nodes[i];
    sum += rule.weights[i] * k.level_integrand(s) * window_ft(T, nu - s * s * bw);
  }
  return k.n_det() * sum;
}

/// Rule in s = sqrt(w) resolving the window transform (width 2 pi / T) across the kernel support.
[[nodiscard]] inline quad::Rule resolution_rule(const ResponseKernel& k, double T) {
  return k.rule_for(static_cast<std::size_t>(std::ceil(2.0 * T * k.bandwidth())) + 64);
}

/// Spectral resolution function F{f D}(nu) = (1/2pi) (window_ft * D~)(nu)  [A^-2 s^-1].
/// Tends to window_ft(T, nu) D(0) for T << hbar/mu and to D~(nu) for T >> hbar/mu.
[[nodiscard]] inline std::vector<double> resolution_function(double T, std::span<const double> omega_grid,
                                                             const ResponseKernel& k) {
  detail::require(T > 0, "resolution_function: T must be positive");
  std::vector<double> out(omega_grid.size(), 0.0);
  if (k.is_zero()) return out;
  const double scale = std::min(2 * pi / T, k.bandwidth());
  for (std::size_t i = 1; i < omega_grid.size(); ++i)
    detail::require(omega_grid[i] - omega_grid[i - 1] <= scale / 4,
                    "resolution_function: grid too coarse for min(2 pi/T, mu/hbar)");
  const auto rule = resolution_rule(k, T);
  for (std::size_t i = 0; i < omega_grid.size(); ++i) out[i] = resolution_at(k, T, omega_grid[i], rule);
  return out;
}

/// Direct 3-D quadrature of int |eta(r)|^2 d^3r over the Thomas-Fermi ellipsoid.
/// With freeze_u the geometry factor is held at U(0) everywhere.
[[nodiscard]] inline double coupling_integral_3d(const NanowireConfig& cfg, const TrapConfig& trap,
                                                 std::size_t n_per_axis, bool freeze_u) {
  const auto tf = chemical_potential(trap);
  if (tf.mu == 0) return 0.0;
  const auto nodes = tf_quadrature_nodes(tf, n_per_axis, n_per_axis, 2 * n_per_axis);
  const double p = drive_prefactor(cfg, trap.constants);
  const double u0_sq = std::norm(u_at_centre(cfg));
  double sum = 0.0;
  for (const auto& node : nodes) {
    if (freeze_u) {
      sum += node.weight * tf_density(node.position, tf, trap) * p * p * u0_sq;
    } else {
      sum += node.weight * std::norm(driving_amplitude(node.position, cfg, tf, trap));
    }
  }
  return sum;
}

}  // namespace qgalv
