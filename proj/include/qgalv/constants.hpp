#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "qgalv/error.hpp"

namespace qgalv {

inline constexpr double pi = std::numbers::pi;

/// Boltzmann constant [J/K], exact in the 2019 SI.
inline constexpr double boltzmann = 1.380649e-23;

/// Unified atomic mass unit [kg], CODATA 2018.
inline constexpr double atomic_mass_unit = 1.66053906660e-27;

using Vec3 = std::array<double, 3>;

/// Species and fundamental constants, SI units throughout.
///
/// Defaults are CODATA 2018 values and the 87Rb F=1 ground state:
///   hbar  1.054571817e-34 J s        (exact)
///   mu_B  9.2740100783e-24 J/T
///   mu_0  1.25663706212e-6 T m/A
///   M     86.909180520 u             (87Rb atomic mass)
///   a_s   5.4e-9 m                   (s-wave scattering length)
///   g_F   -1/2
struct PhysicalConstants {
  double hbar = 1.054571817e-34;
  double mu_B = 9.2740100783e-24;
  double mu_0 = 1.25663706212e-6;
  double mass = 86.909180520 * atomic_mass_unit;
  double a_s = 5.4e-9;
  double g_F = -0.5;

  void validate() const {
    detail::require(hbar > 0 && mu_B > 0 && mu_0 > 0 && mass > 0 && a_s > 0,
                    "physical constants must be strictly positive");
    detail::require(g_F == -0.5, "the F=1 Lande factor must be -1/2");
  }

  /// Larmor angular frequency |g_F| mu_B B / hbar of the m = -1 <-> 0 splitting.
  [[nodiscard]] double larmor(double b_field) const { return 0.5 * mu_B * b_field / hbar; }
};

}  // namespace qgalv
