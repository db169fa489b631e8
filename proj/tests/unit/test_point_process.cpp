#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "shotperc/errors.hpp"
#include "shotperc/geometry.hpp"
#include "shotperc/point_process.hpp"
#include "shotperc/rng.hpp"
#include "shotperc/stats.hpp"

using namespace shotperc;

TEST(BoxRegion, ValidatesAndMeasures) {
  EXPECT_THROW(BoxRegion({0.0, 0.0}, {1.0, 0.0}), InvalidArgument);
  EXPECT_THROW(BoxRegion({0.0}, {1.0, 1.0}), InvalidArgument);
  const BoxRegion b = BoxRegion::rect(0, 0, 2, 3);
  EXPECT_DOUBLE_EQ(b.volume(), 6.0);
  EXPECT_TRUE(b.contains(std::vector<double>{1.0, 1.0}));
  EXPECT_FALSE(b.contains(std::vector<double>{2.5, 1.0}));
  EXPECT_DOUBLE_EQ(BoxRegion::distance(b, BoxRegion::rect(5, 7, 6, 8)), 5.0);
  EXPECT_DOUBLE_EQ(BoxRegion::distance(b, BoxRegion::rect(1, 1, 6, 8)), 0.0);
}

TEST(SamplePoisson, PointsInsideRegion) {
  RngStream rng(1, 0, 0, StreamPurpose::points);
  const BoxRegion box = BoxRegion::rect(-1, 2, 3, 4);
  const auto cfg = sample_poisson(box, 50.0, rng);
  for (std::size_t i = 0; i < cfg.size(); ++i) EXPECT_TRUE(box.contains(cfg.point(i)));
}

TEST(SamplePoisson, RejectsNonPositiveIntensity) {
  RngStream rng(1, 0);
  EXPECT_THROW(sample_poisson(BoxRegion::square(0, 1), 0.0, rng), InvalidArgument);
  EXPECT_THROW(sample_poisson(BoxRegion::square(0, 1), -2.0, rng), InvalidArgument);
}

TEST(SamplePoisson, TinyIntensityIsEmpty) {
  std::size_t nonempty = 0;
  for (std::uint64_t r = 0; r < 1000; ++r) {
    RngStream rng(2, r);
    nonempty += sample_poisson(BoxRegion::square(0, 1), 1e-9, rng).size() > 0;
  }
  EXPECT_EQ(nonempty, 0u);
}

TEST(SamplePoisson, CountMeanAndSubboxIndependence) {
  const BoxRegion unit = BoxRegion::square(0, 1);
  std::vector<double> counts, left, right;
  for (std::uint64_t r = 0; r < 10000; ++r) {
    RngStream rng(3, r);
    const auto cfg = sample_poisson(unit, 100.0, rng);
    counts.push_back(static_cast<double>(cfg.size()));
    double l = 0, rr = 0;
    for (std::size_t i = 0; i < cfg.size(); ++i) (cfg.point(i)[0] < 0.5 ? l : rr) += 1;
    left.push_back(l);
    right.push_back(rr);
  }
  const Summary s = summarize(counts);
  EXPECT_NEAR(s.mean, 100.0, 3.0 * 10.0 / 100.0 * 10.0);
  EXPECT_NEAR(s.variance / 100.0, 1.0, 0.05);
  EXPECT_LT(std::fabs(correlation(left, right)), 0.05);
}

TEST(SamplePoisson, PositionsUniform) {
  std::vector<double> bins(10, 0.0);
  double total = 0;
  for (std::uint64_t r = 0; r < 2000; ++r) {
    RngStream rng(4, r);
    const auto cfg = sample_poisson(BoxRegion::square(0, 1), 20.0, rng);
    for (std::size_t i = 0; i < cfg.size(); ++i) {
      bins[static_cast<std::size_t>(cfg.point(i)[1] * 10)] += 1;
      total += 1;
    }
  }
  double chi2 = 0;
  for (double b : bins) chi2 += (b - total / 10) * (b - total / 10) / (total / 10);
  EXPECT_GT(chi_square_sf(chi2, 9), 0.01);
}

TEST(CompensatedIntegral, EmptyConfiguration) {
  PointConfiguration empty{BoxRegion::square(0, 1), 4.0, {}};
  EXPECT_DOUBLE_EQ(compensated_integral(empty, [](std::span<const double>) { return 1.0; }, 1.0), -2.0);
}

TEST(CompensatedIntegral, LinearInTestFunction) {
  RngStream rng(5, 0);
  const auto cfg = sample_poisson(BoxRegion::square(0, 1), 30.0, rng);
  auto h1 = [](std::span<const double> x) { return x[0] * x[1]; };
  auto h2 = [](std::span<const double> x) { return std::sin(3 * x[0]); };
  const double i1 = 0.25, i2 = (1 - std::cos(3.0)) / 3;
  const double a = 2.5, b = -0.75;
  const double lhs = compensated_integral(
      cfg, [&](std::span<const double> x) { return a * h1(x) + b * h2(x); }, a * i1 + b * i2);
  const double rhs = a * compensated_integral(cfg, h1, i1) + b * compensated_integral(cfg, h2, i2);
  EXPECT_NEAR(lhs, rhs, 1e-12);
}

class CampbellVariance : public ::testing::TestWithParam<double> {};

TEST_P(CampbellVariance, MeanZeroVarianceIntegralOfSquare) {
  const double lambda = GetParam();
  auto h = [](std::span<const double> x) { return x[0] + 2 * x[1] * x[1]; };
  const double ih = 0.5 + 2.0 / 3.0;
  // int (x + 2y^2)^2 = 1/3 + 2 * (1/2)(2/3) + 4/5
  const double ih2 = 1.0 / 3.0 + 2.0 / 3.0 + 0.8;
  std::vector<double> v(10000);
  for (std::uint64_t r = 0; r < v.size(); ++r) {
    RngStream rng(6, r, static_cast<std::uint64_t>(lambda));
    v[r] = compensated_integral(sample_poisson(BoxRegion::square(0, 1), lambda, rng), h, ih);
  }
  const Summary s = summarize(v);
  EXPECT_NEAR(s.mean, 0.0, 3 * s.std_error);
  // Var of a sample variance is about 2 sigma^4 / n for near-normal data; heavier for small lambda.
  const double se_var = std::sqrt((2.0 + 6.0 / lambda) / v.size()) * ih2;
  EXPECT_NEAR(s.variance, ih2, 4 * se_var);
}

INSTANTIATE_TEST_SUITE_P(Intensities, CampbellVariance, ::testing::Values(1.0, 16.0, 256.0));
