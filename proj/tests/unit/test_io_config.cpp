#include <gtest/gtest.h>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "qgalv/config.hpp"
#include "qgalv/io.hpp"

using namespace qgalv;

TEST(Io, NumbersRoundTripExactly) {
  boost::random::mt19937_64 rng(1);
  boost::random::uniform_real_distribution<double> u(-300, 300);
  for (int i = 0; i < 10000; ++i) {
    const double x = std::pow(10.0, u(rng) / 10) * (i % 2 ? -1 : 1);
    EXPECT_EQ(io::parse_double(io::format_double(x), "x"), x);
  }
  EXPECT_TRUE(std::isnan(io::parse_double("nan", "x")));
  EXPECT_THROW((void)io::parse_double("1.5e", "x"), ValidationError);
}

TEST(Io, KernelTableRebuildsTheKernel) {
  KernelOptions o;
  o.mode = KernelMode::Exact3D;
  o.level_points = 17;
  const auto k = build_kernel(fixture::wire(), fixture::trap(1e4), o);
  const double bw = k.bandwidth();
  const auto grid = quad::linspace(-0.5 * bw, 1.5 * bw, 33);
  std::stringstream ss;
  io::write_csv(ss, io::kernel_table(k, grid));
  const auto back = io::kernel_from_table(io::read_csv(ss));
  for (double w : grid) EXPECT_EQ(back.freq(w), k.freq(w));
  EXPECT_EQ(back.coupling_d0(), k.coupling_d0());
  EXPECT_EQ(back.time(3 / bw), k.time(3 / bw));
}

TEST(Io, ScanTableKeepsCounts) {
  ScanResult s;
  s.omega = {-1, 0, 1};
  s.b_offs = {1e-3, 1e-3, 1e-3};
  s.mean_atoms = {0.5, 1.5, 2.5};
  s.T = 0.25;
  s.regime = Regime::Full;
  s.efficiency = 0.7;
  s.shots = 2;
  s.seed = 18446744073709551615ULL;
  s.counts = {{0, 1}, {2, 3}, {4, 5}};
  std::stringstream ss;
  io::write_csv(ss, io::scan_table(s));
  const auto b = io::scan_from_table(io::read_csv(ss));
  EXPECT_EQ(b.mean_atoms, s.mean_atoms);
  EXPECT_EQ(b.counts, s.counts);
  EXPECT_EQ(b.seed, s.seed);
  EXPECT_EQ(b.regime, Regime::Full);
  EXPECT_EQ(b.efficiency, 0.7);
}

TEST(Io, RejectsRaggedRows) {
  std::stringstream ss("a,b\n1,2\n3\n");
  EXPECT_THROW((void)io::read_csv(ss), ValidationError);
}

TEST(Io, JsonCarriesTheSameContent) {
  io::Table t;
  t.set("kind", "demo");
  t.columns = {"x", "y"};
  t.rows = {{1.0, NAN}};
  std::stringstream ss;
  io::write_json(ss, t);
  const auto j = nlohmann::json::parse(ss.str());
  EXPECT_EQ(j["header"]["kind"], "demo");
  EXPECT_TRUE(j["rows"][0][1].is_null());
}

TEST(Config, UnitsConvertToSI) {
  const auto c = config::Config::parse("[trap]\nomega_r = 500 Hz\natoms = 2e4\n[nanowire]\ndistance = 4 um\n"
                                       "[scan]\nT = 10 ms\n");
  EXPECT_DOUBLE_EQ(c.number("trap", "omega_r"), 2 * pi * 500);
  EXPECT_DOUBLE_EQ(c.number("nanowire", "distance"), 4e-6);
  EXPECT_DOUBLE_EQ(c.number("scan", "T"), 1e-2);
  EXPECT_EQ(config::trap_from(c).atom_number, 2e4);
}

TEST(Config, MuUnitsNeedResolvedTrap) {
  auto c = config::Config::parse("[scan]\nomega_min = -0.5 mu\nT = 4 hbar/mu\n");
  EXPECT_THROW((void)c.number("scan", "omega_min"), ValidationError);
  c.resolve_mu(2.0, 0.5);
  EXPECT_DOUBLE_EQ(c.number("scan", "omega_min"), -2.0);
  EXPECT_DOUBLE_EQ(c.number("scan", "T"), 1.0);
}

TEST(Config, RejectsUnknownKeysSectionsAndUnits) {
  EXPECT_THROW((void)config::Config::parse("[trap]\nomega = 5 Hz\n"), ValidationError);
  EXPECT_THROW((void)config::Config::parse("[traps]\n"), ValidationError);
  EXPECT_THROW((void)config::Config::parse("[trap]\nomega_r = 5 furlongs\n"), ValidationError);
  EXPECT_THROW((void)config::Config::parse("omega_r = 5 Hz\n"), ValidationError);
  const auto c = config::Config::parse("[model]\ntype = lorentzian\ngamma = 1 kHz\npower = 1 uA^2\nlevel = 1 A^2*s\n");
  EXPECT_THROW((void)config::model_from(c, {}), ValidationError);
}

TEST(Config, CanonicalFormReparsesToSameValues) {
  auto c = config::Config::parse("[trap]\nomega_r = 0.5 kHz\natoms = 3e4\n[model]\ntype = lorentzian\ncentre = 0.1 mu\n"
                                 "gamma = 0.3 mu\npower = 2 uA^2\n[scan]\nomega_min = -1 mu\nomega_max = 1 mu\nT = 5 hbar/mu\n");
  c.resolve_mu(4e-30, 1.054571817e-34);
  std::string text;
  for (const auto& line : c.canonical()) text += "# cfg " + line + "\n";
  const auto back = config::Config::parse("# qgalv-table 1\n" + text + "a,b\n1,2\n");
  for (const auto& [s, k] : std::vector<std::pair<std::string, std::string>>{
           {"trap", "omega_r"}, {"model", "gamma"}, {"model", "power"}, {"scan", "omega_min"}, {"scan", "T"}})
    EXPECT_EQ(back.number(s, k), c.number(s, k)) << s << "." << k;
}

TEST(Config, ModelBuilders) {
  const auto c = config::Config::parse(
      "[model]\ntype = detailed_balance\nbase = lorentzian\ngamma = 2 kHz\npower = 1 uA^2\ntemperature = 50 nK\n");
  const auto m = config::model_from(c, {});
  EXPECT_EQ(m.kind(), "detailed_balance");
  EXPECT_FALSE(m.is_classical());
  EXPECT_THROW((void)config::model_from(config::Config::parse("[model]\ntype = pink\n"), {}), ValidationError);
}

TEST(Config, ScanByOffsetField) {
  const auto c = config::Config::parse("[scan]\nb_min = 35 G\nb_max = 36 G\npoints = 3\nT = 1 ms\n");
  const auto g = config::scan_from(c, fixture::wire(), {});
  ASSERT_EQ(g.omega.size(), 3u);
  EXPECT_LT(g.omega.front(), g.omega.back());
  EXPECT_NEAR(boffs_from_omega(fixture::wire(), g.omega.front(), {}), 36e-4, 1e-15);
  EXPECT_THROW((void)config::scan_from(config::Config::parse("[scan]\nb_min = 35 G\nomega_min = 1 Hz\nT = 1 ms\n"),
                                       fixture::wire(), {}),
               ValidationError);
}
