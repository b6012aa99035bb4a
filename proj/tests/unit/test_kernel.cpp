#include <gtest/gtest.h>

#include <boost/random/beta_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <cmath>
#include <complex>

#include "fixtures.hpp"
#include "frozen.hpp"
#include "qgalv/kernel.hpp"

using namespace qgalv;

namespace {

const ResponseKernel& exact_1e5() {
  static const ResponseKernel k = [] {
    KernelOptions o;
    o.mode = KernelMode::Exact3D;
    o.level_points = 65;
    return build_kernel(fixture::wire(), fixture::trap(1e5), o);
  }();
  return k;
}

}  // namespace

TEST(Kernel, LevelDensityHasUnitIntegral) {
  // w = t^2 removes the square-root endpoint.
  const auto e = quad::adaptive([](double t) { return 2 * t * d_tilde(t * t); }, 0.0, 1.0, 1e-13);
  EXPECT_NEAR(e.value, 1.0, 1e-9);
}

TEST(Kernel, LevelDensityPeak) {
  const double peak = 5.0 / (2.0 * std::sqrt(3.0));
  EXPECT_NEAR(d_tilde(1.0 / 3.0), peak, 1e-12);
  // Neighbours on a fine grid stay below the closed-form maximum.
  for (int i = 0; i <= 10000; ++i) EXPECT_LE(d_tilde(i / 10000.0), peak + 1e-15);
  EXPECT_EQ(d_tilde(-0.1), 0.0);
  EXPECT_EQ(d_tilde(1.1), 0.0);
}

TEST(Kernel, FrozenGeometryTimeKernel) {
  const auto k = build_kernel(fixture::wire(), fixture::trap());
  const auto d = k.time(5.0 / k.bandwidth()) / k.n_det();
  EXPECT_NEAR(d.real(), frozen::d5_re, 1e-10);
  EXPECT_NEAR(d.imag(), frozen::d5_im, 1e-10);
  EXPECT_LT(fixture::rel(k.time(0).real(), k.n_det()), 1e-12);
  EXPECT_NEAR(k.centroid(), 3.0 / 7.0, 1e-12);
}

TEST(Kernel, TimeKernelIsHermitian) {
  const auto& k = exact_1e5();
  for (double theta : {0.3, 2.0, 17.0}) {
    const double tau = theta / k.bandwidth();
    EXPECT_LE(std::abs(k.time(-tau) - std::conj(k.time(tau))), 1e-12 * std::abs(k.time(tau)));
  }
}

TEST(Kernel, FrozenGeometryMatchesMonteCarloCharacteristicFunction) {
  // With the geometry frozen, D(tau)/n_det is the characteristic function of w ~ Beta(3/2, 2).
  const auto k = build_kernel(fixture::wire(), fixture::trap());
  boost::random::mt19937_64 rng(2024);
  boost::random::beta_distribution<double> beta(1.5, 2.0);
  const int n = 400000;
  for (double theta : {1.0, 4.0, 9.0}) {
    std::complex<double> sum{0, 0};
    for (int i = 0; i < n; ++i) sum += std::polar(1.0, -theta * beta(rng));
    const auto mc = sum / static_cast<double>(n);
    const auto exact = k.time(theta / k.bandwidth()) / k.n_det();
    // Each component has variance <= 1/n.
    EXPECT_LT(std::abs(mc - exact), 5.0 * std::sqrt(2.0 / n)) << "theta " << theta;
  }
}

TEST(Kernel, ShellAverageMatchesSphericalQuadrature) {
  const auto trap = fixture::trap(1e5);
  const auto tf = chemical_potential(trap);
  const double u0 = std::norm(u_at_centre(fixture::wire()));
  KernelOptions o;
  o.angular_tol = 1e-9;
  EXPECT_LT(fixture::rel(shell_average(0.6, fixture::wire(), tf, u0, o), frozen::shell_average_06), 1e-6);
}

TEST(Kernel, ExactCouplingMatchesTensorQuadrature) {
  // Independent route to D(0) = int |eta|^2 d^3r: tensor Gauss-Legendre over the ellipsoid.
  const auto trap = fixture::trap(1e4);
  KernelOptions o;
  o.mode = KernelMode::Exact3D;
  o.level_points = 65;
  const auto k = build_kernel(fixture::wire(), trap, o);
  const double tensor = coupling_integral_3d(fixture::wire(), trap, 32, false);
  EXPECT_LT(fixture::rel(k.coupling_d0(), tensor), 1e-3);
  EXPECT_LT(fixture::rel(coupling_integral_3d(fixture::wire(), trap, 16, true), k.n_det()), 1e-12);
}

TEST(Kernel, LevelTableConvergence) {
  const auto trap = fixture::trap(1e4);
  KernelOptions o;
  o.mode = KernelMode::Exact3D;
  o.level_points = 33;
  const auto coarse = build_kernel(fixture::wire(), trap, o);
  o.level_points = 65;
  const auto fine = build_kernel(fixture::wire(), trap, o);
  EXPECT_LT(fixture::rel(coarse.coupling_d0(), fine.coupling_d0()), 1e-3);
}

TEST(Kernel, FrequencyKernelIsOneSidedWithUnitWeight) {
  const auto& k = exact_1e5();
  const double bw = k.bandwidth();
  EXPECT_EQ(k.freq(-0.01 * bw), 0.0);
  EXPECT_EQ(k.freq(1.01 * bw), 0.0);
  // int D~ dw / 2 pi = D(0).
  const auto e = quad::adaptive([&](double w) { return k.freq(w); }, 0.0, bw, 1e-10);
  EXPECT_LT(fixture::rel(e.value / (2 * pi), k.coupling_d0()), 1e-5);
}

TEST(Kernel, ZeroAtomsGiveZeroKernel) {
  const auto k = build_kernel(fixture::wire(), fixture::trap(0));
  EXPECT_TRUE(k.is_zero());
  EXPECT_EQ(k.freq(1.0), 0.0);
  EXPECT_EQ(k.time(1e-3), std::complex<double>(0, 0));
}

TEST(Kernel, WindowTransformMatchesDirectSum) {
  const double T = 2.5;
  const int n = 200000;
  for (double w : {0.0, 0.7, 3.1, 11.0}) {
    // Trapezoid on the exact triangle; the kinks sit on nodes.
    const double h = 2 * T / n;
    double sum = 0;
    for (int i = 0; i <= n; ++i) {
      const double tau = -T + i * h;
      sum += (i == 0 || i == n ? 0.5 : 1.0) * window(T, tau) * std::cos(w * tau);
    }
    EXPECT_NEAR(sum * h, window_ft(T, w), 1e-8) << "omega " << w;
  }
  EXPECT_THROW((void)window_ft(0.0, 1.0), ValidationError);
}

TEST(Kernel, ResolutionFunctionLimits) {
  const auto& k = exact_1e5();
  const double bw = k.bandwidth();
  const auto grid = quad::linspace(-0.5 * bw, 1.5 * bw, 161);
  const double t_long = 100 / bw;
  const auto longr = resolution_function(t_long, quad::linspace(0.2 * bw, 0.8 * bw, 121), k);
  for (std::size_t i = 0; i < longr.size(); ++i) {
    const double w = 0.2 * bw + 0.6 * bw * static_cast<double>(i) / 120.0;
    EXPECT_LT(fixture::rel(longr[i], k.freq(w)), 0.03) << "w/bw " << w / bw;
  }
  const double t_short = 0.01 / bw;
  const auto shortr = resolution_function(t_short, grid, k);
  for (std::size_t i = 0; i < grid.size(); ++i)
    EXPECT_LT(fixture::rel(shortr[i], window_ft(t_short, grid[i]) * k.coupling_d0()), 1e-3);
}

TEST(Kernel, FrequencySamplingRejectsCoarseGrid) {
  const auto k = build_kernel(fixture::wire(), fixture::trap());
  const double bw = k.bandwidth();
  EXPECT_THROW((void)kernel_freq(k, quad::linspace(-0.5 * bw, 1.5 * bw, 5)), ValidationError);
  EXPECT_THROW((void)kernel_freq(k, quad::linspace(0.0, 1.5 * bw, 100)), ValidationError);
}

TEST(Kernel, ModeStrings) {
  EXPECT_EQ(kernel_mode_from_string(to_string(KernelMode::Exact3D)), KernelMode::Exact3D);
  EXPECT_THROW((void)kernel_mode_from_string("exact"), ValidationError);
}
