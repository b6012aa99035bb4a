#include <gtest/gtest.h>

#include <complex>

#include "fixtures.hpp"
#include "frozen.hpp"
#include "qgalv/kernel.hpp"
#include "qgalv/nanowire.hpp"

using namespace qgalv;

TEST(Nanowire, GeometryFactorAtCentre) {
  EXPECT_LT(fixture::rel(std::norm(u_at_centre(fixture::wire())), frozen::u0_sq), 1e-9);
}

TEST(Nanowire, GeometryFactorOffCentre) {
  const auto u = u_factor({0.1, -0.2, 0.15}, 0.5);
  EXPECT_NEAR(u.real(), frozen::u_off_re, 1e-9);
  EXPECT_NEAR(u.imag(), frozen::u_off_im, 1e-9);
}

TEST(Nanowire, MirrorInXConjugates) {
  for (const Vec3& r : {Vec3{0.13, 0.2, 0.05}, Vec3{0.4, -0.5, 0.3}, Vec3{0.02, 0.6, -0.7}}) {
    const auto a = u_factor(r, 0.5);
    const auto b = u_factor({-r[0], r[1], r[2]}, 0.5);
    EXPECT_LE(std::abs(a - std::conj(b)), 1e-10 * std::abs(a));
  }
}

TEST(Nanowire, MirrorInZIsSymmetricForCentredWire) {
  for (const Vec3& r : {Vec3{0.13, 0.2, 0.05}, Vec3{0.4, -0.5, 0.3}, Vec3{0.0, 0.1, -0.9}}) {
    const auto a = u_factor(r, 0.5);
    const auto b = u_factor({r[0], r[1], -r[2]}, 0.5);
    EXPECT_LE(std::abs(a - b), 1e-10 * std::abs(a));
  }
}

TEST(Nanowire, ImaginaryPartVanishesInSymmetryPlane) {
  EXPECT_EQ(u_factor({0.0, 0.3, 0.2}, 0.5).imag(), 0.0);
}

TEST(Nanowire, RejectsPointOnWireAxis) {
  EXPECT_THROW((void)u_factor({0.0, -1.0, 0.0}, 0.5), ValidationError);
}

TEST(Nanowire, DrivingAmplitudeZeroOutsideCloud) {
  const auto trap = fixture::trap();
  const auto tf = chemical_potential(trap);
  EXPECT_EQ(driving_amplitude({0, 0, 1.01 * tf.c}, fixture::wire(), tf, trap), std::complex<double>(0, 0));
}

TEST(Nanowire, OffsetFieldRoundTrip) {
  const auto w = fixture::wire();
  const PhysicalConstants k;
  for (double b : {1e-4, 3.5e-3, 7.1e-3}) EXPECT_LT(fixture::rel(boffs_from_omega(w, omega_from_boffs(w, b, k), k), b), 1e-12);
  EXPECT_THROW((void)boffs_from_omega(w, 1.01 * w.omega_cnt, k), ValidationError);
  EXPECT_THROW((void)omega_from_boffs(w, -1.0, k), ValidationError);
}

TEST(Nanowire, LarmorWindowWarning) {
  const PhysicalConstants k;
  EXPECT_TRUE(larmor_warnings(3.5e-3, k).empty());
  EXPECT_FALSE(larmor_warnings(1e-7, k).empty());
}

TEST(Nanowire, ValidationWarningsAndErrors) {
  auto w = fixture::wire();
  w.distance = 0.5e-6;
  EXPECT_FALSE(w.validate().empty());
  w.length = -1;
  EXPECT_THROW((void)w.validate(), ValidationError);
}
