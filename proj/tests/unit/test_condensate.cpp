#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "frozen.hpp"
#include "qgalv/condensate.hpp"

using namespace qgalv;

TEST(Condensate, ChemicalPotentialMatchesNormalisationRoot) {
  EXPECT_LT(fixture::rel(chemical_potential(fixture::trap(1e3)).mu, frozen::mu_1e3), 1e-12);
  EXPECT_LT(fixture::rel(chemical_potential(fixture::trap(1e5)).mu, frozen::mu_1e5), 1e-12);
}

TEST(Condensate, DensityIntegratesToAtomNumber) {
  for (double n : {1e3, 1e4, 1e5, 1e6}) {
    const auto trap = fixture::trap(n);
    const auto tf = chemical_potential(trap);
    double total = 0;
    for (const auto& node : tf_quadrature_nodes(tf, 24, 24, 8)) total += node.weight * tf_density(node.position, tf, trap);
    EXPECT_LT(fixture::rel(total, n), 1e-6) << "N = " << n;
  }
}

TEST(Condensate, ChemicalPotentialScalesAsTwoFifthsPower) {
  const double base = chemical_potential(fixture::trap(1e3)).mu;
  for (double n : {1e4, 1e5, 1e6}) {
    const double expected = base * std::pow(n / 1e3, 0.4);
    EXPECT_LT(fixture::rel(chemical_potential(fixture::trap(n)).mu, expected), 1e-12);
  }
}

TEST(Condensate, PotentialEqualsMuOnTheBoundary) {
  const auto trap = fixture::trap();
  const auto tf = chemical_potential(trap);
  for (double ct : {-1.0, -0.3, 0.0, 0.7, 1.0})
    for (double phi : {0.0, 1.1, 2.5})
      EXPECT_LT(fixture::rel(trap_potential(ellipsoid_point(tf, 1.0, ct, phi), trap), tf.mu), 1e-12);
  EXPECT_NEAR(tf.b / tf.c, trap.omega_z / trap.omega_r, 1e-14);
}

TEST(Condensate, DensityVanishesOutsideSupport) {
  const auto trap = fixture::trap();
  const auto tf = chemical_potential(trap);
  EXPECT_EQ(tf_density(ellipsoid_point(tf, 1.0001, 0.2, 0.3), tf, trap), 0.0);
  EXPECT_GT(tf_density({0, 0, 0}, tf, trap), 0.0);
}

TEST(Condensate, NodeWeightsSumToEllipsoidVolume) {
  const auto tf = chemical_potential(fixture::trap());
  double v = 0;
  for (const auto& node : tf_quadrature_nodes(tf, 10, 10, 12)) v += node.weight;
  EXPECT_LT(fixture::rel(v, 4 * pi * tf.b * tf.b * tf.c / 3), 1e-13);
}

TEST(Condensate, ZeroAtomsGiveZeroMu) {
  const auto tf = chemical_potential(fixture::trap(0));
  EXPECT_EQ(tf.mu, 0.0);
  EXPECT_EQ(tf.b, 0.0);
}

TEST(Condensate, RejectsInvalidTrap) {
  auto t = fixture::trap();
  t.atom_number = -1;
  EXPECT_THROW((void)chemical_potential(t), ValidationError);
  t = fixture::trap();
  t.omega_r = 0;
  EXPECT_THROW(t.validate(), ValidationError);
}
