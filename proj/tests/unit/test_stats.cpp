#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "shotperc/distributions.hpp"
#include "shotperc/errors.hpp"
#include "shotperc/rng.hpp"
#include "shotperc/stats.hpp"

using namespace shotperc;

TEST(FitLogLog, ExactPowerLaws) {
  const std::vector<double> x{1, 2, 4, 8, 16};
  std::vector<double> y;
  for (double v : x) y.push_back(std::pow(v, -2.0));
  EXPECT_NEAR(fit_loglog(x, y).slope, -2.0, 1e-12);

  const std::vector<double> flat(x.size(), 5.0);
  EXPECT_NEAR(fit_loglog(x, flat).slope, 0.0, 1e-12);

  y.clear();
  for (double v : x) y.push_back(3 * std::pow(v, -0.5));
  const RateFit f = fit_loglog(x, y);
  EXPECT_NEAR(f.slope, -0.5, 1e-12);
  EXPECT_NEAR(f.intercept, std::log(3.0), 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  EXPECT_EQ(f.x, x);
}

TEST(FitLogLog, RejectsBadInput) {
  EXPECT_THROW(fit_loglog(std::vector<double>{1, 2}, std::vector<double>{1, 2}), InvalidArgument);
  EXPECT_THROW(fit_loglog(std::vector<double>{1, 2, 3}, std::vector<double>{1, 0, 2}), InvalidArgument);
  EXPECT_THROW(fit_loglog(std::vector<double>{-1, 2, 3}, std::vector<double>{1, 1, 2}), InvalidArgument);
}

TEST(FitLogLog, RSquaredInUnitInterval) {
  RngStream rng(1, 0);
  std::vector<double> x, y;
  for (int i = 1; i <= 20; ++i) {
    x.push_back(i);
    y.push_back(std::exp(rng.normal()));
  }
  const RateFit f = fit_loglog(x, y);
  EXPECT_GE(f.r_squared, 0.0);
  EXPECT_LE(f.r_squared, 1.0);
}

TEST(Quantiles, InterpolationAndMedianError) {
  const std::vector<double> x{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(quantile(x, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(x, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(median(x), 2.5);
  EXPECT_THROW(quantile({}, 0.5), InvalidArgument);
  RngStream rng(2, 0);
  std::vector<double> z(10000);
  for (double& v : z) v = rng.normal();
  // Median of n normals has standard error sqrt(pi / 2n).
  EXPECT_NEAR(median_std_error(z), std::sqrt(std::acos(-1.0) / 2 / z.size()), 3e-3);
}

TEST(KsDistance, SmallForMatchingLawLargeOtherwise) {
  RngStream rng(3, 0);
  std::vector<double> z(20000);
  for (double& v : z) v = rng.normal();
  EXPECT_LT(ks_distance_normal(z, 0, 1), 0.015);
  EXPECT_GT(ks_distance_normal(z, 0.5, 1), 0.15);
}

TEST(Summary, MeanVarianceStdError) {
  const std::vector<double> x{1, 2, 3, 4};
  const Summary s = summarize(x);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.variance, 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.std_error, std::sqrt(5.0 / 3.0 / 4.0));
}

TEST(ChiSquare, KnownTailValues) {
  EXPECT_NEAR(chi_square_sf(3.841458820694124, 1), 0.05, 1e-10);
  EXPECT_NEAR(chi_square_sf(2.0, 2), std::exp(-1.0), 1e-12);
}

TEST(Distributions, NormalTailsAndPoissonCdf) {
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-16);
  EXPECT_NEAR(normal_sf(8.0), 6.22096057427178e-16, 1e-26);
  EXPECT_NEAR(normal_cdf(-1.0) + normal_sf(-1.0), 1.0, 1e-15);
  EXPECT_NEAR(poisson_cdf(1.0, 0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(poisson_cdf(1.0, 1), 2 * std::exp(-1.0), 1e-15);
  double acc = 0;
  for (std::uint64_t k = 0; k <= 1200; ++k) acc += poisson_pmf(1000.0, k);
  EXPECT_NEAR(acc, poisson_cdf(1000.0, 1200), 1e-12);
}
