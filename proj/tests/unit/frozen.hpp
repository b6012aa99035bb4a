#pragma once

// Reference values from tests/oracles/frozen_values.py (mpmath, 30 digits; scipy for the
// shell average). Frozen here so the suite has no Python dependency.

namespace frozen {

// Chemical potential [J] from the root of the Thomas-Fermi normalisation, 500/109 Hz trap.
inline constexpr double mu_1e3 = 6.992787576991407e-31;
inline constexpr double mu_1e5 = 4.412150680092583e-30;

// Geometry factor, L/y0 = 0.5.
inline constexpr double u0_sq = 0.37829150001980985;
inline constexpr double u_off_re = -1.0295362296975859;  // at (0.1, -0.2, 0.15) y0
inline constexpr double u_off_im = -0.066434324590591322;

// Frozen-geometry D(tau)/n_det at tau mu/hbar = 5.
inline constexpr double d5_re = -0.21827142029360694;
inline constexpr double d5_im = -0.41259365402691091;

// N / (T n_det P hbar/mu), frozen geometry, Lorentzian centred at 0 with width 0.3 mu/hbar.
inline constexpr double longtime_lorentzian_04 = 4.7204382743593771;  // Omega = 0.4 mu/hbar
inline constexpr double full_lorentzian_025_t4 = 2.5761531594435921;  // Omega = 0.25, T = 4 hbar/mu

// Shell average of |U|^2/|U(0)|^2 at rho = 0.6, N = 1e5, default wire.
inline constexpr double shell_average_06 = 0.4515166782132379;

}  // namespace frozen
