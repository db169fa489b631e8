#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "shotperc/errors.hpp"
#include "shotperc/experiments.hpp"
#include "shotperc/percolation.hpp"
#include "shotperc/rng.hpp"

using namespace shotperc;

namespace {

ModelSpec gaussian_model() {
  ModelSpec m(Kernel::rational(2, 3.0));
  m.kind = FieldModelKind::gaussian;
  return m;
}

ModelSpec shot_model(double lambda) {
  ModelSpec m(Kernel::rational(2, 3.0));
  m.kind = FieldModelKind::shot_noise;
  m.lambda = lambda;
  return m;
}

GridField sample_field(std::uint64_t replica) {
  const FieldModel fm(gaussian_model(), BoxRegion::square(0, 4));
  return fm.sample(1, replica);
}

std::vector<std::uint8_t> random_mask(std::size_t rows, std::size_t cols, double density, RngStream& rng) {
  std::vector<std::uint8_t> m(rows * cols);
  for (auto& b : m) b = rng.uniform() < density;
  return m;
}

}  // namespace

TEST(Excursion, ExtremeLevelsAndMonotonicity) {
  const GridField f = sample_field(0);
  const auto [lo, hi] = std::minmax_element(f.values.begin(), f.values.end());
  const auto all = excursion(f, *hi + 1);
  const auto none = excursion(f, *lo - 1);
  EXPECT_TRUE(std::all_of(all.mask.begin(), all.mask.end(), [](auto b) { return b == 1; }));
  EXPECT_TRUE(std::all_of(none.mask.begin(), none.mask.end(), [](auto b) { return b == 0; }));
  const auto a = excursion(f, -0.3);
  const auto b = excursion(f, 0.4);
  for (std::size_t i = 0; i < a.mask.size(); ++i) {
    ASSERT_LE(a.mask[i], b.mask[i]);
    ASSERT_EQ(a.mask[i], f.values[i] <= -0.3);
  }
}

TEST(Excursion, TiesIncludedAndNonFiniteRejected) {
  GridField f = sample_field(1);
  const double v = f.values[10];
  EXPECT_EQ(excursion(f, v).mask[10], 1);
  f.values[3] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(excursion(f, 0.0), InvalidArgument);
}

TEST(Crossing, FullAndBlockedMasks) {
  const std::size_t n = 9;
  std::vector<std::uint8_t> full(n * n, 1);
  EXPECT_TRUE(crossing_mask(full, n, n, Orientation::left_right, Connectivity::primal));
  EXPECT_TRUE(crossing_mask(full, n, n, Orientation::top_bottom, Connectivity::primal));
  EXPECT_FALSE(crossing_mask(full, n, n, Orientation::top_bottom, Connectivity::dual));
  // A closed line at fixed axis-0 index blocks left-right and is a dual top-bottom crossing.
  std::vector<std::uint8_t> wall = full;
  for (std::size_t j = 0; j < n; ++j) wall[4 * n + j] = 0;
  EXPECT_FALSE(crossing_mask(wall, n, n, Orientation::left_right, Connectivity::primal));
  EXPECT_TRUE(crossing_mask(wall, n, n, Orientation::top_bottom, Connectivity::dual));
}

TEST(Crossing, DiagonalNeedsEightConnectivity) {
  // Closed sites on the anti-diagonal: the dual crosses via diagonal steps, the primal cannot.
  const std::size_t n = 6;
  std::vector<std::uint8_t> m(n * n, 1);
  for (std::size_t i = 0; i < n; ++i) m[i * n + (n - 1 - i)] = 0;
  EXPECT_FALSE(crossing_mask(m, n, n, Orientation::left_right, Connectivity::primal));
  EXPECT_TRUE(crossing_mask(m, n, n, Orientation::top_bottom, Connectivity::dual));
}

TEST(Crossing, ExactDualityOnRandomMasks) {
  RngStream rng(2, 0, 0, StreamPurpose::mask);
  for (int t = 0; t < 3000; ++t) {
    const std::size_t rows = 1 + static_cast<std::size_t>(rng.uniform() * 25);
    const std::size_t cols = 1 + static_cast<std::size_t>(rng.uniform() * 25);
    const auto m = random_mask(rows, cols, rng.uniform(), rng);
    ASSERT_NE(crossing_mask(m, rows, cols, Orientation::left_right, Connectivity::primal),
              crossing_mask(m, rows, cols, Orientation::top_bottom, Connectivity::dual));
    ASSERT_NE(crossing_mask(m, rows, cols, Orientation::top_bottom, Connectivity::primal),
              crossing_mask(m, rows, cols, Orientation::left_right, Connectivity::dual));
  }
  EXPECT_EQ(audit_random_masks(500, 3).violations, 0u);
}

TEST(Crossing, DualityOnFieldSubrectangles) {
  const GridField f = sample_field(2);
  for (double level : {-1.0, -0.2, 0.0, 0.3, 1.2}) {
    const auto ex = excursion(f, level);
    for (const BoxRegion& r : {BoxRegion::square(0, 4), BoxRegion::rect(0.5, 1.0, 3.0, 2.0), BoxRegion::rect(1, 0, 2, 4)}) {
      EXPECT_NE(crossing(ex, r, Orientation::left_right, Connectivity::primal),
                crossing(ex, r, Orientation::top_bottom, Connectivity::dual));
    }
  }
}

TEST(Crossing, RectangleOutsideRegionRejected) {
  const auto ex = excursion(sample_field(3), 0.0);
  EXPECT_THROW(crossing(ex, BoxRegion::square(2, 6), Orientation::left_right, Connectivity::primal), InvalidArgument);
}

TEST(Crossing, IncreasingInLevel) {
  for (std::uint64_t r = 0; r < 20; ++r) {
    const GridField f = sample_field(10 + r);
    bool prev = false;
    for (double level = -3; level <= 3; level += 0.1) {
      const bool c = crossing(excursion(f, level), BoxRegion::square(0, 4), Orientation::left_right, Connectivity::primal);
      ASSERT_TRUE(!prev || c);
      prev = c;
    }
  }
}

TEST(CrossingThreshold, IsTheMinimaxLevel) {
  const BoxRegion sq = BoxRegion::square(0, 4);
  for (std::uint64_t r = 0; r < 20; ++r) {
    const GridField f = sample_field(40 + r);
    const double t = crossing_threshold(f, sq, Orientation::left_right);
    EXPECT_TRUE(crossing(excursion(f, t), sq, Orientation::left_right, Connectivity::primal));
    EXPECT_FALSE(crossing(excursion(f, std::nextafter(t, -1e9)), sq, Orientation::left_right, Connectivity::primal));
  }
}

TEST(Wilson, IntervalProperties) {
  const auto w = wilson_interval(50, 100);
  EXPECT_NEAR(w.center, 0.5, 1e-12);
  EXPECT_NEAR(w.half_width, 0.0961, 1e-3);
  const auto z = wilson_interval(0, 100);
  EXPECT_GT(z.half_width, 0.0);
  EXPECT_THROW(wilson_interval(0, 0), InvalidArgument);
}

TEST(CrossingProbability, LowLevelAndReplicaFloor) {
  const BoxRegion sq = BoxRegion::square(0, 4);
  const auto e = crossing_probability(gaussian_model(), -10.0, sq, Orientation::left_right, 40, 4);
  EXPECT_EQ(e.successes, 0u);
  EXPECT_EQ(e.p, 0.0);
  EXPECT_THROW(crossing_probability(gaussian_model(), 0.0, sq, Orientation::left_right, 29, 4), InvalidArgument);
}

TEST(CrossingProbability, MonotoneLadderWithCommonRandomNumbers) {
  const BoxRegion sq = BoxRegion::square(0, 4);
  double prev = -1;
  for (double level = -1.0; level <= 1.0; level += 0.25) {
    const auto e = crossing_probability(shot_model(64), level, sq, Orientation::left_right, 60, 5);
    EXPECT_GE(e.p, prev);
    EXPECT_EQ(e.std_error, wilson_interval(e.successes, e.replicas).half_width);
    prev = e.p;
  }
}

TEST(CriticalLevel, EquivariantUnderShift) {
  ModelSpec base = shot_model(16);
  ModelSpec shifted = base;
  shifted.shift = 0.7;
  const auto a = estimate_critical_level(base, 4, 60, 1e-3, 6);
  const auto b = estimate_critical_level(shifted, 4, 60, 1e-3, 6);
  EXPECT_NEAR(b.level - a.level, 0.7, 1e-9);
  EXPECT_NEAR(b.bracket_lo - a.bracket_lo, 0.7, 1e-9);
}

TEST(CriticalLevel, BracketAndErrors) {
  std::vector<double> t;
  for (int i = 0; i < 101; ++i) t.push_back(-1 + 0.02 * i);
  const auto e = critical_level_from_thresholds(t, 0.0, 1.0, 1e-4);
  EXPECT_LT(e.p_lo, 0.5);
  EXPECT_GT(e.p_hi, 0.5);
  EXPECT_NEAR(e.level, 0.0, 0.02);
  EXPECT_GT(e.std_error, 0.0);
  std::vector<double> far(50, 20.0);
  EXPECT_THROW(critical_level_from_thresholds(far, 0.0, 1.0, 1e-3), PreconditionError);
  EXPECT_THROW(critical_level_from_thresholds(t, 0.0, 1.0, 0.0), InvalidArgument);
}

TEST(Kesten, GeometryDistancesAndCoverage) {
  for (double R : {1.0, 7.0, 16.0}) {
    const auto g = kesten_geometry(R);
    EXPECT_EQ(g.left.size(), 16u);
    EXPECT_EQ(g.right.size(), 16u);
    for (const auto& a : g.left) {
      EXPECT_TRUE(g.region.contains(a.rect));
      for (const auto& b : g.right) EXPECT_GE(BoxRegion::distance(a.rect, b.rect), R - 1e-12);
    }
    EXPECT_GE(g.min_pair_distance, R - 1e-12);
    EXPECT_TRUE(g.region.contains(g.master));
  }
}

TEST(Kesten, AllOpenFieldRealizesEveryEvent) {
  ModelSpec m = gaussian_model();
  m.shift = -100;
  const auto rep = kesten_check(m, 2, 0.0, 0.0, 10, 7);
  EXPECT_EQ(rep.inclusion_violations, 0u);
  EXPECT_DOUBLE_EQ(rep.p_master, 1.0);
  EXPECT_DOUBLE_EQ(rep.max_pair_product, 1.0);
}

TEST(Kesten, InclusionHoldsOnRandomFields) {
  const auto rep = kesten_check(shot_model(64), 2, 0.0, 0.0, 60, 8);
  EXPECT_EQ(rep.inclusion_violations, 0u);
  EXPECT_GE(rep.min_pair_distance, 2 - 1e-12);
}

TEST(Sprinkle, LargeSprinkleGivesNonnegativeSlack) {
  const auto rep = sprinkling_check(shot_model(64), 2, 0.0, 50.0, 60, 9);
  EXPECT_DOUBLE_EQ(rep.p_a, 1.0);
  EXPECT_DOUBLE_EQ(rep.p_b, 1.0);
  EXPECT_GE(rep.slack, 0.0);
}

TEST(Sprinkle, IndependentBaselineIsNearZero) {
  const auto rep = sprinkling_check(gaussian_model(), 2, 0.0, 0.0, 300, 10, true);
  EXPECT_GE(rep.slack, -2 * rep.std_error - 1e-12);
  EXPECT_LE(std::fabs(rep.slack), 4 * rep.std_error + 1e-12);
}
