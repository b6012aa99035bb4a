#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "frozen.hpp"
#include "qgalv/spectra.hpp"

using namespace qgalv;

namespace {

const ResponseKernel& frozen_kernel() {
  static const ResponseKernel k = build_kernel(fixture::wire(), fixture::trap(1e4));
  return k;
}

const ResponseKernel& exact_kernel() {
  static const ResponseKernel k = [] {
    KernelOptions o;
    o.mode = KernelMode::Exact3D;
    o.level_points = 65;
    return build_kernel(fixture::wire(), fixture::trap(1e4), o);
  }();
  return k;
}

}  // namespace

TEST(Spectra, FlatNoiseGivesWindowTimesCoupling) {
  for (const auto* k : {&frozen_kernel(), &exact_kernel()}) {
    const double s0 = 3e-15;
    const double T = 0.02;
    const auto m = NoiseSpectrumModel::flat(s0);
    const ForwardModel f(*k, m, T, Regime::LongTime);
    for (double w : {-2.0, 0.0, 0.5, 3.0}) EXPECT_LT(fixture::rel(f(w * k->bandwidth()), T * s0 * k->coupling_d0()), 1e-12);
  }
}

TEST(Spectra, LongTimeLorentzianMatchesReference) {
  const auto& k = frozen_kernel();
  const double bw = k.bandwidth();
  const double power = 2e-12;
  const double T = 0.05;
  const auto m = NoiseSpectrumModel::lorentzian(0.0, 0.3 * bw, power);
  const double expected = T * k.n_det() * power / bw * frozen::longtime_lorentzian_04;
  EXPECT_LT(fixture::rel(transferred_atoms(m, k, T, 0.4 * bw, Regime::LongTime), expected), 1e-8);
}

TEST(Spectra, FullLorentzianMatchesClosedFormWindow) {
  const auto& k = frozen_kernel();
  const double bw = k.bandwidth();
  const double power = 2e-12;
  const double T = 4 / bw;
  const auto m = NoiseSpectrumModel::lorentzian(0.0, 0.3 * bw, power);
  const double expected = T * k.n_det() * power / bw * frozen::full_lorentzian_025_t4;
  EXPECT_LT(fixture::rel(transferred_atoms(m, k, T, 0.25 * bw, Regime::Full), expected), 1e-7);
}

TEST(Spectra, FullApproachesLongTimeInside) {
  const auto& k = exact_kernel();
  const double bw = k.bandwidth();
  const auto m = NoiseSpectrumModel::lorentzian(0.1 * bw, 0.4 * bw, 1e-12);
  const double T = 100 / bw;
  const ForwardModel full(k, m, T, Regime::Full, bw);
  const ForwardModel lt(k, m, T, Regime::LongTime);
  for (double w : {0.0, 0.3, 0.6}) EXPECT_LT(fixture::rel(full(w * bw), lt(w * bw)), 0.03) << w;
}

TEST(Spectra, ForwardMapIsLinear) {
  const auto& k = exact_kernel();
  const double bw = k.bandwidth();
  const auto a = NoiseSpectrumModel::lorentzian(0.2 * bw, 0.3 * bw, 1e-12);
  const auto b = NoiseSpectrumModel::band(4e-17, 1.3 * bw);
  const auto c = NoiseSpectrumModel::line(0.5 * bw, 2e-13);
  const auto sum = NoiseSpectrumModel::sum({a, b, c});
  for (auto regime : {Regime::LongTime, Regime::Full}) {
    const double T = 10 / bw;
    for (double w : {-0.4, 0.1, 0.7}) {
      const double o = w * bw;
      const double parts = transferred_atoms(a, k, T, o, regime) + transferred_atoms(b, k, T, o, regime) +
                           transferred_atoms(c, k, T, o, regime);
      EXPECT_LT(fixture::rel(transferred_atoms(sum, k, T, o, regime), parts), 1e-9) << to_string(regime) << " " << w;
    }
  }
  // Homogeneity.
  const auto a3 = NoiseSpectrumModel::lorentzian(0.2 * bw, 0.3 * bw, 3e-12);
  EXPECT_LT(fixture::rel(transferred_atoms(a3, k, 0.01, 0.4 * bw, Regime::LongTime),
                         3 * transferred_atoms(a, k, 0.01, 0.4 * bw, Regime::LongTime)),
            1e-12);
}

TEST(Spectra, ForwardMapIsNonNegative) {
  const auto& k = exact_kernel();
  const double bw = k.bandwidth();
  const auto grid = quad::linspace(-3 * bw, 3 * bw, 61);
  const std::vector<NoiseSpectrumModel> models{
      NoiseSpectrumModel::lorentzian(0.0, 0.05 * bw, 1e-12), NoiseSpectrumModel::band(1e-16, 0.5 * bw),
      NoiseSpectrumModel::line(0.8 * bw, 1e-12, false),
      NoiseSpectrumModel::detailed_balance(NoiseSpectrumModel::lorentzian(0.0, 0.5 * bw, 1e-12), 0.0)};
  for (const auto& m : models)
    for (auto regime : {Regime::LongTime, Regime::Full}) {
      const auto s = scan(m, k, fixture::wire(), {}, 3 / bw, grid, regime);
      for (double n : s.mean_atoms) EXPECT_GE(n, 0.0) << m.describe();
    }
}

TEST(Spectra, LineInLongTimeIsScaledKernel) {
  const auto& k = exact_kernel();
  const double bw = k.bandwidth();
  const auto m = NoiseSpectrumModel::line(0.2 * bw, 5e-13, false);
  const double T = 0.1;
  for (double w : {0.3, 0.5, 0.9})
    EXPECT_LT(fixture::rel(transferred_atoms(m, k, T, w * bw, Regime::LongTime), T * 5e-13 * k.freq((w - 0.2) * bw)), 1e-12);
}

TEST(Spectra, DetailedBalanceRatio) {
  const double hbar = PhysicalConstants{}.hbar;
  const double temp = 2e-8;
  const auto m = NoiseSpectrumModel::detailed_balance(NoiseSpectrumModel::lorentzian(0.0, 5e3, 1e-12), temp);
  EXPECT_FALSE(m.is_classical());
  for (double w : {1e3, 4e3, 2e4}) {
    const double ratio = m.density(-w) / m.density(w);
    EXPECT_LT(fixture::rel(ratio, std::exp(-hbar * w / (boltzmann * temp))), 1e-12);
  }
  const auto cold = NoiseSpectrumModel::detailed_balance(NoiseSpectrumModel::lorentzian(0.0, 5e3, 1e-12), 0.0);
  EXPECT_EQ(cold.density(-1e3), 0.0);
  EXPECT_LT(fixture::rel(cold.density(1e3), 2 * NoiseSpectrumModel::lorentzian(0.0, 5e3, 1e-12).density(1e3)), 1e-15);
}

TEST(Spectra, AutocorrelationIsHermitianAndMatchesTransform) {
  const auto m = NoiseSpectrumModel::detailed_balance(NoiseSpectrumModel::lorentzian(0.0, 5e3, 1e-12), 2e-8);
  for (double tau : {1e-5, 2e-4, 1e-3}) {
    const auto c = m.regular_autocorrelation(tau);
    EXPECT_LE(std::abs(m.regular_autocorrelation(-tau) - std::conj(c)), 1e-9 * std::abs(c));
    // Brute-force transform of the density: C = (1/2pi) int S e^{-i w tau}.
    auto re = [&](double w) { return m.density(w) * std::cos(w * tau); };
    auto im = [&](double w) { return -m.density(w) * std::sin(w * tau); };
    // Panels of 1e4 rad/s hold at most a few oscillations; the tail beyond 2e7 is below 1e-4 of C.
    double cre = 0, cim = 0;
    for (double a = -2e7; a < 2e7; a += 1e4) {
      cre += quad::adaptive(re, a, a + 1e4, 1e-11, 1e-30).value / (2 * pi);
      cim += quad::adaptive(im, a, a + 1e4, 1e-11, 1e-30).value / (2 * pi);
    }
    EXPECT_LT(std::abs(c - std::complex<double>(cre, cim)), 2e-3 * std::abs(c)) << tau;
  }
}

TEST(Spectra, AsymmetryIsPairwiseDifference) {
  const auto& k = exact_kernel();
  const double bw = k.bandwidth();
  const auto m = NoiseSpectrumModel::detailed_balance(NoiseSpectrumModel::lorentzian(0.0, 0.5 * bw, 1e-12),
                                                      0.5 * k.mu() / boltzmann);
  const auto grid = quad::linspace(-2 * bw, 2 * bw, 41);
  const auto s = scan(m, k, fixture::wire(), {}, 0.05, grid, Regime::LongTime);
  const auto a = asymmetry(s);
  const ForwardModel f(k, m, 0.05, Regime::LongTime);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(a[i], f(grid[i]) - f(-grid[i]), 1e-12 * s.mean_atoms[20] + 1e-300);
  EXPECT_NEAR(a[20], 0.0, 0.0);
  EXPECT_THROW((void)asymmetry(scan(m, k, fixture::wire(), {}, 0.05, quad::linspace(-bw, 2 * bw, 5), Regime::LongTime)),
               ValidationError);
}

TEST(Spectra, DetailedBalanceFullAgreesWithLongTime) {
  const auto& k = exact_kernel();
  const double bw = k.bandwidth();
  const auto m = NoiseSpectrumModel::detailed_balance(NoiseSpectrumModel::lorentzian(0.0, 0.5 * bw, 1e-12),
                                                      0.3 * k.mu() / boltzmann);
  const ForwardModel full(k, m, 100 / bw, Regime::Full, bw);
  const ForwardModel lt(k, m, 100 / bw, Regime::LongTime);
  const double peak = lt(0.5 * bw);
  for (double w : {-0.5, 0.2, 0.5}) EXPECT_LT(std::abs(full(w * bw) - lt(w * bw)), 0.03 * peak) << w;
  // Window leakage onto the suppressed side falls off as 1/T.
  const ForwardModel full3(k, m, 300 / bw, Regime::Full, bw);
  const ForwardModel lt3(k, m, 300 / bw, Regime::LongTime);
  const double dev = fixture::rel(full(-0.5 * bw), lt(-0.5 * bw));
  const double dev3 = fixture::rel(full3(-0.5 * bw), lt3(-0.5 * bw));
  EXPECT_LT(dev3, dev / 2.5);
}

TEST(Spectra, FullRegimeRejectsBalancedWhiteNoise) {
  const auto m = NoiseSpectrumModel::detailed_balance(NoiseSpectrumModel::flat(1e-16), 1e-8);
  EXPECT_THROW(ForwardModel(exact_kernel(), m, 0.01, Regime::Full), ValidationError);
  EXPECT_NO_THROW(ForwardModel(exact_kernel(), m, 0.01, Regime::LongTime));
}

TEST(Spectra, ModelValidation) {
  EXPECT_THROW((void)NoiseSpectrumModel::lorentzian(0.0, -1.0, 1.0), ValidationError);
  EXPECT_THROW((void)NoiseSpectrumModel::flat(-1.0), ValidationError);
  EXPECT_THROW((void)NoiseSpectrumModel::tabulated({1.0, 0.5}, {1.0, 1.0}), ValidationError);
  EXPECT_THROW((void)NoiseSpectrumModel::detailed_balance(NoiseSpectrumModel::line(1.0, 1.0, false), 1e-8),
               ValidationError);
}

TEST(Spectra, TabulatedInterpolatesLinearly) {
  const auto m = NoiseSpectrumModel::tabulated({-1.0, 0.0, 2.0}, {0.0, 4.0, 2.0});
  EXPECT_DOUBLE_EQ(m.density(-0.5), 2.0);
  EXPECT_DOUBLE_EQ(m.density(1.0), 3.0);
  EXPECT_EQ(m.density(3.0), 0.0);
}

TEST(Spectra, ScanChecksGridAndWarnsOutsideRotatingWave) {
  const auto& k = frozen_kernel();
  const auto m = NoiseSpectrumModel::lorentzian(0.0, 1e3, 1e-12);
  EXPECT_THROW((void)scan(m, k, fixture::wire(), {}, 0.01, std::vector<double>{1.0, 1.0}, Regime::LongTime),
               ValidationError);
  const double far = 0.2 * fixture::wire().omega_cnt;
  EXPECT_FALSE(scan(m, k, fixture::wire(), {}, 0.01, std::vector<double>{0.0, far}, Regime::LongTime).warnings.empty());
  EXPECT_TRUE(scan(m, k, fixture::wire(), {}, 0.01, std::vector<double>{0.0, 1e3}, Regime::LongTime).warnings.empty());
}

TEST(Spectra, SensitivityEstimateScale) {
  const auto& k = frozen_kernel();
  const double T = 0.3;
  const double rms = sensitivity_estimate(k, T);
  // Power rms^2 spread evenly over a band of width mu/hbar: S0 = 2 pi rms^2 / (mu/hbar), N = 2 pi.
  const auto m = NoiseSpectrumModel::flat(2 * pi * rms * rms / k.bandwidth());
  EXPECT_LT(fixture::rel(transferred_atoms(m, k, T, 0.0, Regime::LongTime), 2 * pi), 1e-12);
}
