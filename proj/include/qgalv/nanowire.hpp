#pragma once

// Magnetic coupling of the vibrating, current-carrying nanotube to the condensate.
//
// Frame: the wire runs parallel to z at x = 0, y = -y0; its midpoint faces z = z_offset.
// The oscillating field component couples m = -1 to m = 0 with the local amplitude
//   eta(r) = i sqrt(N) phi_BEC(r) * mu_0 mu_B a / (16 pi sqrt2 hbar y0^2) * U(r)
// per unit current, detuned by Delta(r) = Omega - V_T(r)/hbar.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "qgalv/condensate.hpp"
#include "qgalv/constants.hpp"
#include "qgalv/error.hpp"
#include "qgalv/quadrature.hpp"

namespace qgalv {

struct NanowireConfig {
  double length = 2e-6;               ///< L [m]
  double distance = 4e-6;             ///< y0, wire to condensate centre [m]
  double amplitude = 10e-9;           ///< a, vibration amplitude [m]
  double omega_cnt = 2 * pi * 50e6;   ///< mechanical angular frequency [rad/s]
  double z_offset = 0.0;              ///< axial position of the wire midpoint [m]

  /// Throws on hard violations, returns soft warnings.
  std::vector<std::string> validate() const {
    detail::require(length > 0 && std::isfinite(length), "nanowire.length must be > 0");
    detail::require(distance > 0 && std::isfinite(distance), "nanowire.distance must be > 0");
    detail::require(amplitude >= 0 && std::isfinite(amplitude), "nanowire.amplitude must be >= 0");
    detail::require(omega_cnt > 0 && std::isfinite(omega_cnt), "nanowire.omega_cnt must be > 0");
    detail::require(std::isfinite(z_offset), "nanowire.z_offset must be finite");
    detail::require(amplitude < distance, "nanowire.amplitude must be smaller than nanowire.distance");
    std::vector<std::string> warnings;
    if (amplitude >= 0.1 * distance)
      warnings.emplace_back("vibration amplitude is not small compared to the wire distance (a/y0 >= 0.1)");
    if (distance < 1e-6)
      warnings.emplace_back("wire distance below 1 um: van der Waals forces are not negligible");
    return warnings;
  }
};

/// Geometry factor U(r) of a thin wire vibrating in its fundamental string mode.
/// `r` and `length_over_y0` are in units of the wire distance y0; r is measured from the
/// condensate centre with the wire midpoint at z = 0.
[[nodiscard]] inline std::complex<double> u_factor(const Vec3& r, double length_over_y0,
                                                   double rel_tol = 1e-8, double* error = nullptr) {
  const double x = r[0];
  const double h = 1.0 + r[1];
  const double z = r[2];
  const double len = length_over_y0;
  detail::require(len > 0, "u_factor: wire length must be positive");
  const double rho2 = x * x + h * h;
  if (!(rho2 > 1e-24))
    throw ValidationError("u_factor: evaluation point lies on the wire axis");

  auto axial = [&](double zeta) { return 0.5 * len + z - zeta; };
  auto real_part = [&](double zeta) {
    const double dz = axial(zeta);
    const double d2 = rho2 + dz * dz;
    return (x * x - 2 * h * h + dz * dz) / (d2 * d2 * std::sqrt(d2)) * std::sin(pi * zeta / len);
  };
  auto imag_part = [&](double zeta) {
    const double dz = axial(zeta);
    const double d2 = rho2 + dz * dz;
    return -x * h / (d2 * d2 * std::sqrt(d2)) * std::sin(pi * zeta / len);
  };

  // The integrand peaks where the wire element is closest to the point.
  const std::vector<double> breaks{0.5 * len + z};
  const auto re = quad::adaptive_split(real_part, 0.0, len, breaks, rel_tol);
  double err = re.error;
  double im = 0.0;
  if (x != 0.0) {
    const auto ie = quad::adaptive_split(imag_part, 0.0, len, breaks, rel_tol);
    im = ie.value;
    err += ie.error;
  }
  if (error) *error = err;
  return {re.value, im};
}

/// mu_0 mu_B a / (16 pi sqrt2 hbar y0^2)  [A^-1 s^-1]
[[nodiscard]] inline double drive_prefactor(const NanowireConfig& cfg, const PhysicalConstants& k) {
  return k.mu_0 * k.mu_B * cfg.amplitude /
         (16 * pi * std::sqrt(2.0) * k.hbar * cfg.distance * cfg.distance);
}

/// Position in units of y0, relative to the wire midpoint frame used by u_factor.
[[nodiscard]] inline Vec3 wire_frame(const Vec3& r, const NanowireConfig& cfg) {
  return {r[0] / cfg.distance, r[1] / cfg.distance, (r[2] - cfg.z_offset) / cfg.distance};
}

/// eta(r) per unit current [m^-3/2 A^-1 s^-1]; exactly zero outside the Thomas-Fermi support.
[[nodiscard]] inline std::complex<double> driving_amplitude(const Vec3& r, const NanowireConfig& cfg,
                                                            const CondensateTF& tf,
                                                            const TrapConfig& trap) {
  const double density = tf_density(r, tf, trap);
  if (density <= 0) return {0.0, 0.0};
  const std::complex<double> u = u_factor(wire_frame(r, cfg), cfg.length / cfg.distance);
  const std::complex<double> i_unit{0.0, 1.0};
  return i_unit * std::sqrt(density) * drive_prefactor(cfg, trap.constants) * u;
}

/// Delta(r) = Omega - V_T(r)/hbar  [rad/s]
[[nodiscard]] inline double detuning(const Vec3& r, double omega, const TrapConfig& trap) {
  return omega - trap_potential(r, trap) / trap.constants.hbar;
}

/// Omega = omega_cnt - mu_B B_offs / (2 hbar).
[[nodiscard]] inline double omega_from_boffs(const NanowireConfig& cfg, double b_offs,
                                             const PhysicalConstants& k) {
  if (b_offs < 0 || !std::isfinite(b_offs)) throw ValidationError("B_offs must be non-negative");
  return cfg.omega_cnt - k.larmor(b_offs);
}

/// Inverse of omega_from_boffs.
[[nodiscard]] inline double boffs_from_omega(const NanowireConfig& cfg, double omega,
                                             const PhysicalConstants& k) {
  const double b = 2 * k.hbar * (cfg.omega_cnt - omega) / k.mu_B;
  if (b < 0) throw ValidationError("requested Omega exceeds omega_cnt (would need negative B_offs)");
  return b;
}

/// Soft check that the Larmor frequency stays inside the tunable 0.1-100 MHz window.
[[nodiscard]] inline std::vector<std::string> larmor_warnings(double b_offs, const PhysicalConstants& k) {
  std::vector<std::string> out;
  const double f = k.larmor(b_offs) / (2 * pi);
  if (f < 0.1e6 || f > 100e6)
    out.push_back("Larmor frequency " + std::to_string(f * 1e-6) + " MHz is outside 0.1-100 MHz");
  return out;
}

}  // namespace qgalv
