#pragma once

// Thomas-Fermi description of the trapped condensate in the m = -1 sublevel.

#include <cmath>
#include <cstddef>
#include <vector>

#include "qgalv/constants.hpp"
#include "qgalv/error.hpp"
#include "qgalv/quadrature.hpp"

namespace qgalv {

struct TrapConfig {
  double omega_r = 2 * pi * 500.0;  ///< radial trap frequency [rad/s]
  double omega_z = 2 * pi * 109.0;  ///< axial trap frequency [rad/s]
  double atom_number = 1e5;         ///< condensate atom number N (real-valued)
  double b_offs = 1e-4;             ///< homogeneous offset field [T]
  PhysicalConstants constants{};

  void validate() const {
    constants.validate();
    detail::require(omega_r > 0 && std::isfinite(omega_r), "trap.omega_r must be > 0");
    detail::require(omega_z > 0 && std::isfinite(omega_z), "trap.omega_z must be > 0");
    detail::require(atom_number >= 0 && std::isfinite(atom_number), "trap.atom_number must be >= 0");
    detail::require(b_offs > 0 && std::isfinite(b_offs), "trap.b_offs must be > 0");
  }
};

struct CondensateTF {
  double mu = 0;        ///< chemical potential measured from the trap bottom [J]
  double mu_prime = 0;  ///< mu + mu_B B_offs / 2 [J]
  double g = 0;         ///< contact interaction constant [J m^3]
  double b = 0;         ///< radial semi-axis [m]
  double c = 0;         ///< axial semi-axis [m]

  /// Intrinsic probe bandwidth mu / hbar [rad/s].
  [[nodiscard]] double bandwidth(const PhysicalConstants& k) const { return mu / k.hbar; }
};

/// g = 4 pi hbar^2 a_s / M.
[[nodiscard]] inline double interaction_g(const PhysicalConstants& k) {
  return 4 * pi * k.hbar * k.hbar * k.a_s / k.mass;
}

/// mu = (N g 15/(8 pi) w_r^2 w_z)^(2/5) (M/2)^(3/5), with the ellipsoid semi-axes
/// b = sqrt(2 mu / (M w_r^2)) and c = sqrt(2 mu / (M w_z^2)).
[[nodiscard]] inline CondensateTF chemical_potential(const TrapConfig& trap) {
  if (trap.atom_number < 0) throw ValidationError("atom number must be non-negative");
  trap.validate();
  const auto& k = trap.constants;
  CondensateTF tf;
  tf.g = interaction_g(k);
  const double base =
      trap.atom_number * tf.g * 15.0 / (8.0 * pi) * trap.omega_r * trap.omega_r * trap.omega_z;
  tf.mu = std::pow(base, 0.4) * std::pow(0.5 * k.mass, 0.6);
  tf.mu_prime = tf.mu + 0.5 * k.mu_B * trap.b_offs;
  tf.b = std::sqrt(2 * tf.mu / (k.mass * trap.omega_r * trap.omega_r));
  tf.c = std::sqrt(2 * tf.mu / (k.mass * trap.omega_z * trap.omega_z));
  return tf;
}

/// V_T(r) = (M/2) [w_r^2 (x^2 + y^2) + w_z^2 z^2]  [J]
[[nodiscard]] inline double trap_potential(const Vec3& r, const TrapConfig& trap) {
  const double m = trap.constants.mass;
  return 0.5 * m *
         (trap.omega_r * trap.omega_r * (r[0] * r[0] + r[1] * r[1]) +
          trap.omega_z * trap.omega_z * r[2] * r[2]);
}

/// N |phi_BEC(r)|^2 = (mu - V_T)/g inside the Thomas-Fermi ellipsoid, exactly zero outside [m^-3].
[[nodiscard]] inline double tf_density(const Vec3& r, const CondensateTF& tf, const TrapConfig& trap) {
  if (tf.g <= 0) return 0.0;
  const double excess = tf.mu - trap_potential(r, trap);
  return excess > 0 ? excess / tf.g : 0.0;
}

/// Point of the trap frame at stretched ellipsoidal coordinates (rho, cos theta, phi);
/// rho = 1 is the Thomas-Fermi boundary and V_T = mu rho^2 there.
[[nodiscard]] inline Vec3 ellipsoid_point(const CondensateTF& tf, double rho, double cos_theta,
                                          double phi) {
  const double sin_theta = std::sqrt(std::max(0.0, 1 - cos_theta * cos_theta));
  return {tf.b * rho * sin_theta * std::cos(phi), tf.b * rho * sin_theta * std::sin(phi),
          tf.c * rho * cos_theta};
}

struct QuadratureNode {
  Vec3 position;
  double weight;  ///< volume element [m^3]
  std::size_t shell;  ///< index of the radial (rho) node; V_T is constant on a shell
};

/// Tensor-product nodes over the Thomas-Fermi ellipsoid in stretched coordinates:
/// Gauss-Legendre in rho on [0, 1] and in cos(theta) on [-1, 1], uniform in phi.
/// Weights sum to the support volume 4 pi b^2 c / 3.
[[nodiscard]] inline std::vector<QuadratureNode> tf_quadrature_nodes(const CondensateTF& tf,
                                                                     std::size_t n_rho,
                                                                     std::size_t n_theta,
                                                                     std::size_t n_phi) {
  const auto rho_rule = quad::gauss_legendre(n_rho, 0.0, 1.0);
  const auto ct_rule = quad::gauss_legendre(n_theta, -1.0, 1.0);
  std::vector<QuadratureNode> nodes;
  nodes.reserve(n_rho * n_theta * n_phi);
  const double jac = tf.b * tf.b * tf.c;
  const double dphi = 2 * pi / static_cast<double>(n_phi);
  for (std::size_t i = 0; i < rho_rule.size(); ++i) {
    const double rho = rho_rule.nodes[i];
    for (std::size_t j = 0; j < ct_rule.size(); ++j) {
      for (std::size_t k = 0; k < n_phi; ++k) {
        const double phi = dphi * (static_cast<double>(k) + 0.5);
        nodes.push_back({ellipsoid_point(tf, rho, ct_rule.nodes[j], phi),
                         jac * rho * rho * rho_rule.weights[i] * ct_rule.weights[j] * dphi, i});
      }
    }
  }
  return nodes;
}

}  // namespace qgalv
