#include <sensoropt/dataset.hpp>
#include <sensoropt/sensor.hpp>

#include "test_util.hpp"

#include <cmath>
#include <fstream>
#include <set>

using namespace sensoropt;
using sensoropt::test::TempDir;

TEST(Grid, Table1EnumerationEnds) {
  const auto grid = enumerate_grid(GridSpec::table1());
  ASSERT_EQ(grid.size(), 3125u);
  EXPECT_EQ(grid.front(), (Settings{418, 112, 400, 2850, 3200}));
  EXPECT_EQ(grid.back(), (Settings{510, 144, 500, 3650, 4000}));
  EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
}

TEST(Grid, Input6RepeatIsKept) {
  const auto spec = GridSpec::table1();
  EXPECT_EQ(spec.values[4].size(), 5u);
  EXPECT_EQ(std::count(spec.values[4].begin(), spec.values[4].end(), 3600.0), 2);
  EXPECT_EQ(spec.combination_count(), 3125u);
  EXPECT_EQ(spec.row_count(), 625000u);
}

TEST(Grid, SingleValuePerInput) {
  GridSpec spec;
  for (auto& v : spec.values) v = {1.0};
  EXPECT_EQ(enumerate_grid(spec).size(), 1u);
  EXPECT_EQ(spec.row_count(), 200u);
}

TEST(Grid, ScaledSizes) {
  EXPECT_EQ(GridSpec::scaled(1.0).combination_count(), 3125u);
  EXPECT_EQ(GridSpec::scaled(0.2).combination_count(), 32u);
  EXPECT_EQ(GridSpec::scaled(0.2).row_count(), 6400u);
  EXPECT_EQ(GridSpec::scaled(0.0).combination_count(), 1u);
  const auto two = GridSpec::scaled(0.2);
  for (std::size_t i = 0; i < kSettingCount; ++i) {
    EXPECT_EQ(two.values[i].front(), GridSpec::table1().values[i].front());
    EXPECT_EQ(two.values[i].back(), GridSpec::table1().values[i].back());
  }
  EXPECT_THROWS_KIND(GridSpec::scaled(1.5), ErrorKind::Config);
  EXPECT_THROWS_KIND(GridSpec::scaled(-0.1), ErrorKind::Config);
}

TEST(Grid, MalformedSpec) {
  GridSpec spec = GridSpec::table1();
  spec.values[2].clear();
  EXPECT_THROWS_KIND(enumerate_grid(spec), ErrorKind::Config);
  spec = GridSpec::table1();
  spec.values[0] = {3, 2, 1};
  EXPECT_THROWS_KIND(enumerate_grid(spec), ErrorKind::Config);
}

TEST(Oracle, DeterministicAndPure) {
  SensorGroundTruth t;
  t.noise_db = 0.7;
  t.seed = 99;
  const Settings s{441, 128, 450, 3250, 3600};
  const auto a = simulate(t, s, 17, 2);
  const auto b = simulate(t, s, 17, 2);
  EXPECT_EQ(a.signal, b.signal);
  EXPECT_EQ(a.snr, b.snr);
  EXPECT_EQ(a.output3, b.output3);
  t.seed = 100;
  EXPECT_NE(simulate(t, s, 17, 2).snr, a.snr);
}

TEST(Oracle, DomainErrors) {
  SensorGroundTruth t;
  const Settings s{418, 112, 400, 2850, 3200};
  EXPECT_THROWS_KIND(simulate(t, s, -1, 0), ErrorKind::Domain);
  EXPECT_THROWS_KIND(simulate(t, s, 50, 0), ErrorKind::Domain);
  EXPECT_THROWS_KIND(simulate(t, s, 0, 4), ErrorKind::Domain);
  EXPECT_THROWS_KIND(simulate(t, s, 0, -1), ErrorKind::Domain);
}

TEST(Oracle, SnrAtDipCenterIsTrendMinusDepth) {
  SensorGroundTruth t;
  t.dip_center_span_log10 = 0;
  const Settings s{464, 128, 450, 3250, 3600};
  const double l = signal_log10(t, s, 36, 1);
  t.dip_center_log10 = l;
  const auto out = simulate(t, s, 36, 1);
  EXPECT_NEAR(out.snr, 5 * std::log10(out.signal) - dip_depth(t, s), 1e-12);
}

TEST(Oracle, SignalOneGivesZeroSnr) {
  SensorGroundTruth t;
  t.offset_log10 = 0;
  t.offset_span_log10 = 0;
  t.category_offset_log10 = {0, 0, 0, 0};
  const auto out = simulate(t, Settings{418, 112, 400, 2850, 3200}, 0, 0);
  EXPECT_DOUBLE_EQ(out.signal, 1.0);
  EXPECT_NEAR(out.snr, 0.0, 1e-9);
}

TEST(Oracle, DatasetInvariants) {
  SensorGroundTruth t;
  const auto table = generate_dataset(t, GridSpec::table1());
  ASSERT_EQ(table.size(), 625000u);
  std::size_t below = 0;
  for (const auto& r : table) {
    ASSERT_GT(r.signal, 0);
    ASSERT_GT(r.output3, 0);
    if (r.signal < 2e3) {
      ++below;
      ASSERT_LT(std::abs(r.snr - 5 * std::log10(r.signal)), 0.5) << r.signal;
    }
  }
  EXPECT_GT(below, 0u);
  for (std::size_t block = 0; block < table.size(); block += kRowsPerCombination) {
    for (std::size_t i = block + kCategories; i < block + kRowsPerCombination; ++i) {
      ASSERT_EQ(table[i].category, table[i - kCategories].category);
      ASSERT_GE(table[i].signal, table[i - kCategories].signal);
    }
  }
}

TEST(Oracle, RowOrder) {
  SensorGroundTruth t;
  const auto table = generate_dataset(t, GridSpec::scaled(0.2));
  ASSERT_EQ(table.size(), 6400u);
  EXPECT_EQ(table[0].input5, 0);
  EXPECT_EQ(table[0].category, 0);
  EXPECT_EQ(table[1].category, 1);
  EXPECT_EQ(table[4].input5, 1);
  EXPECT_EQ(table[199].input5, 49);
  EXPECT_EQ(table[199].category, 3);
  EXPECT_EQ(table[200].settings(), enumerate_grid(GridSpec::scaled(0.2))[1]);
}

TEST(Oracle, DipDepthVariesAndStaysNearFive) {
  SensorGroundTruth t;
  std::set<double> depths;
  double lo = 1e9, hi = 0;
  for (const auto& s : enumerate_grid(GridSpec::table1())) {
    const double d = dip_depth(t, s);
    depths.insert(d);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  EXPECT_GT(depths.size(), 10u);
  EXPECT_GT(lo, 1.0);
  EXPECT_LT(hi, 10.0);
  EXPECT_LT(lo, 5.77);
  EXPECT_GT(hi, 5.77);
}

TEST(Oracle, DipCenterInsideWindow) {
  SensorGroundTruth t;
  for (const auto& s : enumerate_grid(GridSpec::scaled(0.2))) {
    const double c = std::pow(10.0, dip_center_log10(t, s));
    EXPECT_GE(c, 3e3);
    EXPECT_LE(c, 1e4);
  }
}

TEST(Oracle, ConfigRoundTrip) {
  TempDir dir;
  SensorGroundTruth t;
  t.seed = 1234;
  t.noise_db = 0.25;
  t.dip_depth_db = 4.5;
  t.category_gain = {1.0, 0.9, 0.8, 0.7};
  t.save(dir / "oracle.json");
  const auto u = SensorGroundTruth::load(dir / "oracle.json");
  EXPECT_EQ(u.seed, 1234u);
  EXPECT_EQ(u.noise_db, 0.25);
  EXPECT_EQ(u.dip_depth_db, 4.5);
  EXPECT_EQ(u.category_gain, t.category_gain);
  const Settings s{441, 120, 475, 3050, 3600};
  EXPECT_EQ(simulate(u, s, 20, 3).snr, simulate(t, s, 20, 3).snr);
}

TEST(Oracle, ConfigErrors) {
  TempDir dir;
  {
    std::ofstream(dir / "bad.json") << R"({"seed": 1, "no_such_key": 3})";
  }
  EXPECT_THROWS_KIND(SensorGroundTruth::load(dir / "bad.json"), ErrorKind::Config);
  {
    std::ofstream(dir / "neg.json") << R"({"noise_db": -1})";
  }
  EXPECT_THROWS_KIND(SensorGroundTruth::load(dir / "neg.json"), ErrorKind::Config);
  EXPECT_THROWS_KIND(SensorGroundTruth::load(dir / "missing.json"), ErrorKind::Io);
}

TEST(Oracle, RegenerationIsByteIdentical) {
  TempDir dir;
  SensorGroundTruth t;
  t.seed = 5;
  t.noise_db = 0.3;
  write_csv(generate_dataset(t, GridSpec::scaled(0.2)), dir / "a.csv");
  write_csv(generate_dataset(t, GridSpec::scaled(0.2)), dir / "b.csv");
  std::ifstream a(dir / "a.csv", std::ios::binary), b(dir / "b.csv", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_FALSE(sa.empty());
  EXPECT_EQ(sa, sb);
}
