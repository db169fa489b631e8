#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "shotperc/coupling.hpp"
#include "shotperc/distributions.hpp"
#include "shotperc/errors.hpp"
#include "shotperc/stats.hpp"
#include "shotperc/synthesis.hpp"

using namespace shotperc;

namespace {

constexpr double kPi = std::numbers::pi;

double chi_square_poisson(const std::vector<std::uint64_t>& draws, double lambda) {
  // Pool the tails so every expected count is at least 5.
  const double n = static_cast<double>(draws.size());
  std::vector<double> observed;
  std::vector<double> expected;
  std::uint64_t lo = 0;
  while (n * poisson_cdf(lambda, lo) < 5) ++lo;
  std::uint64_t hi = lo;
  while (n * (1 - poisson_cdf(lambda, hi)) >= 5) ++hi;
  for (std::uint64_t k = lo; k <= hi; ++k) {
    double e = k == lo ? poisson_cdf(lambda, lo) : poisson_pmf(lambda, k);
    if (k == hi) e = 1 - poisson_cdf(lambda, hi - 1);
    expected.push_back(n * e);
    observed.push_back(0);
  }
  for (std::uint64_t x : draws) observed[std::clamp(x, lo, hi) - lo] += 1;
  double chi2 = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    chi2 += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
  }
  return chi_square_sf(chi2, static_cast<double>(observed.size() - 1));
}

double gradient_l2(const CubeFunction& h) {
  const int n = 400;
  const double step = 1.0 / n;
  const double fd = 1e-6;
  double total = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double x = (i + 0.5) * step, y = (j + 0.5) * step;
      const std::vector<double> px{x + fd, y}, mx{x - fd, y}, py{x, y + fd}, my{x, y - fd};
      const double gx = (h(px) - h(mx)) / (2 * fd);
      const double gy = (h(py) - h(my)) / (2 * fd);
      total += (gx * gx + gy * gy) * step * step;
    }
  }
  return std::sqrt(total);
}

}  // namespace

TEST(BinaryExpansion, OneDimensionalQuarters) {
  const BinaryExpansion e(1, 2);
  for (std::uint64_t k = 0; k < 4; ++k) {
    const BoxRegion c = e.cell(2, k);
    EXPECT_DOUBLE_EQ(c.lower(0), 0.25 * k);
    EXPECT_DOUBLE_EQ(c.upper(0), 0.25 * (k + 1));
  }
}

TEST(BinaryExpansion, TwoDimensionalDiameterBound) {
  const BinaryExpansion e(2, 2);
  EXPECT_DOUBLE_EQ(e.diameter(2), std::sqrt(2.0) / 2);
  for (int j = 0; j <= 2; ++j) { EXPECT_LE(e.diameter(j), std::sqrt(2.0) * std::pow(2.0, 1 - j / 2.0) + 1e-15); }
}

TEST(BinaryExpansion, ExactVolumesAndChildPartition) {
  for (int d : {1, 2, 3}) {
    const BinaryExpansion e(d, 10);
    for (int j = 0; j <= 10; ++j) {
      for (std::uint64_t k = 0; k < e.cells_at(j); ++k) {
        const BoxRegion c = e.cell(j, k);
        ASSERT_EQ(c.volume(), std::ldexp(1.0, -j));
        ASSERT_LE(e.diameter(j), std::sqrt(d) * std::pow(2.0, 1.0 - static_cast<double>(j) / d) + 1e-15);
        if (j == 10) continue;
        const BoxRegion lo = e.cell(j + 1, 2 * k), hi = e.cell(j + 1, 2 * k + 1);
        const int axis = BinaryExpansion::split_axis(j, d);
        ASSERT_EQ(lo.lower(), c.lower());
        ASSERT_EQ(hi.upper(), c.upper());
        ASSERT_EQ(lo.upper(axis), hi.lower(axis));
        ASSERT_EQ(lo.volume() + hi.volume(), c.volume());
      }
    }
  }
  EXPECT_THROW(BinaryExpansion(2, 31), InvalidArgument);
}

TEST(BinaryExpansion, LocateAgreesWithCells) {
  const BinaryExpansion e(2, 8);
  RngStream rng(1, 0);
  for (int i = 0; i < 1000; ++i) {
    const std::vector<double> x{rng.uniform(), rng.uniform()};
    for (int j : {0, 3, 8}) ASSERT_TRUE(e.cell(j, e.locate(x, j)).contains(x));
  }
}

TEST(L2Modulus, ConstantLinearAndShift) {
  const BoxRegion unit1({0.0}, {1.0});
  EXPECT_NEAR(l2_modulus([](std::span<const double>) { return 3.0; }, unit1), 0.0, 1e-15);
  EXPECT_NEAR(l2_modulus([](std::span<const double> x) { return x[0]; }, unit1), 1.0 / 12, 1e-14);
  auto h = [](std::span<const double> x) { return std::sin(4 * x[0]) * x[1]; };
  auto h2 = [&](std::span<const double> x) { return h(x) + 7.0; };
  const BoxRegion sq = BoxRegion::rect(0.0, 0.0, 0.5, 1.0);
  EXPECT_NEAR(l2_modulus(h, sq), l2_modulus(h2, sq), 1e-12);
  EXPECT_GT(l2_modulus(h, sq), 0.0);
}

TEST(QModulus, ExactLinearValueHomogeneityAndMonotonicity) {
  const BinaryExpansion e1(1, 12);
  EXPECT_NEAR(q_modulus([](std::span<const double> x) { return x[0]; }, e1, 0), 1 / std::sqrt(12.0), 1e-10);

  const BinaryExpansion e2(2, 12);
  auto h = [](std::span<const double> x) { return std::exp(x[0]) * std::cos(2 * x[1]); };
  const auto base = q_modulus_profile(h, e2);
  const auto scaled = q_modulus_profile([&](std::span<const double> x) { return 3.5 * h(x); }, e2);
  for (std::size_t m = 0; m < base.size(); ++m) {
    EXPECT_NEAR(scaled[m], 3.5 * base[m], 1e-12 * scaled[m]);
    if (m > 0) { EXPECT_GE(base[m], base[m - 1]); }
  }
  const auto flat = q_modulus_profile([](std::span<const double>) { return -1.0; }, e2);
  for (double v : flat) { EXPECT_NEAR(v, 0.0, 1e-12); }
  EXPECT_NEAR(q_modulus(h, e2, 5), base[5], 1e-14);
}

TEST(QModulus, PoincareBoundForSmoothFunctions) {
  const int d = 2;
  const double c = poincare_constant(d);
  EXPECT_NEAR(c, 0.8 / (kPi * kPi), 1e-15);
  const BinaryExpansion e(d, 12);
  const std::vector<CubeFunction> tests{
      [](std::span<const double> x) { return x[0] + 2 * x[1]; },
      [](std::span<const double> x) { return std::sin(3 * x[0]) * std::cos(2 * x[1]); },
      [](std::span<const double> x) { return std::exp(x[0] * x[1]); },
      [](std::span<const double> x) { return 1 / (1 + x[0] * x[0] + x[1] * x[1]); },
      [](std::span<const double> x) { return x[0] * x[0] * x[0] - x[1] * x[1]; },
  };
  for (const auto& h : tests) {
    const double grad = gradient_l2(h);
    const auto q = q_modulus_profile(h, e);
    for (int m = 0; m <= 12; ++m) { EXPECT_LE(q[m], 2 * std::sqrt(d * c) * grad * std::sqrt(m + 1.0)); }
  }
}

TEST(PoissonCoupling, MedianAtUnitIntensity) {
  const PoissonNormalCoupler c(1.0);
  EXPECT_EQ(c(0.0), 1u);
  EXPECT_EQ(c(-5.0), 0u);
}

TEST(PoissonCoupling, ComonotoneInNormal) {
  const PoissonNormalCoupler c(37.5);
  std::uint64_t prev = 0;
  for (double z = -8; z <= 8; z += 0.01) {
    const auto n = c(z);
    ASSERT_GE(n, prev);
    prev = n;
  }
}

TEST(PoissonCoupling, QuantileDefinition) {
  for (double lambda : {0.5, 3.0, 100.0, 5000.0}) {
    const PoissonNormalCoupler c(lambda);
    for (double z : {-6.0, -2.0, -0.3, 0.0, 0.7, 2.5, 6.0}) {
      const auto n = c(z);
      const double u = normal_cdf(z);
      EXPECT_GE(poisson_cdf(lambda, n), u * (1 - 1e-12));
      if (n > 0) { EXPECT_LT(poisson_cdf(lambda, n - 1), u * (1 + 1e-12)); }
    }
  }
}

class PoissonMarginal : public ::testing::TestWithParam<double> {};

TEST_P(PoissonMarginal, ChiSquarePasses) {
  const double lambda = GetParam();
  std::vector<std::uint64_t> draws(100000);
  for (std::uint64_t i = 0; i < draws.size(); ++i) {
    RngStream rng(2, i, 0, StreamPurpose::coupling);
    draws[i] = couple_poisson_gaussian(lambda, rng).first;
  }
  EXPECT_GT(chi_square_poisson(draws, lambda), 0.01);
}

INSTANTIATE_TEST_SUITE_P(Intensities, PoissonMarginal, ::testing::Values(1.0, 20.0));

TEST(PoissonCoupling, DiscrepancyTailDecaysExponentially) {
  const double lambda = 100;
  const PoissonNormalCoupler c(lambda);
  RngStream rng(3, 0);
  std::vector<double> gaps(400000);
  for (double& g : gaps) {
    const double z = rng.normal();
    g = std::fabs(static_cast<double>(c(z)) - lambda - std::sqrt(lambda) * z);
  }
  std::vector<double> ts, logs;
  for (double t : {1.0, 1.5, 2.0, 2.5}) {
    const double p = static_cast<double>(std::count_if(gaps.begin(), gaps.end(), [&](double g) { return g >= t; })) /
                     static_cast<double>(gaps.size());
    ASSERT_GT(p, 0.0) << "t=" << t;
    ts.push_back(t);
    logs.push_back(std::log(p));
  }
  EXPECT_LT(fit_linear(ts, logs).slope, 0.0);
}

TEST(BinomialCoupling, QuantileDefinitionAndSymmetry) {
  BinomialHalfCoupler b;
  for (std::uint64_t n : {0u, 1u, 10u, 101u, 4000u}) {
    // Exact CDF by recurrence.
    std::vector<double> cdf(n + 1);
    double logp = -static_cast<double>(n) * std::log(2.0);
    double acc = 0;
    for (std::uint64_t k = 0; k <= n; ++k) {
      if (k > 0) logp += std::log(static_cast<double>(n - k + 1)) - std::log(static_cast<double>(k));
      acc += std::exp(logp);
      cdf[k] = acc;
    }
    std::uint64_t prev = 0;
    for (double z = -4; z <= 4; z += 0.37) {
      const auto k = b(n, z);
      ASSERT_LE(k, n);
      ASSERT_GE(k, prev);
      prev = k;
      const double u = normal_cdf(z);
      EXPECT_GE(cdf[k], u * (1 - 1e-9)) << n << " " << z;
      if (k > 0) { EXPECT_LT(cdf[k - 1], u * (1 + 1e-9)) << n << " " << z; }
    }
    if (n % 2 == 1) { EXPECT_EQ(b(n, 0.3) + b(n, -0.3), n); }
  }
  EXPECT_THROW(b(2'000'000, 0.0), InvalidArgument);
}

TEST(CoupleCell, EmptyCellHasPureGaussianMasses) {
  const BinaryExpansion e(2, 6);
  std::vector<double> leaf0;
  for (std::uint64_t r = 0; r < 4000; ++r) {
    RngStream rng(4, r);
    const auto c = couple_cell(0, e, 4, rng);
    ASSERT_TRUE(c.points.empty());
    for (auto n : c.leaf_counts) { ASSERT_EQ(n, 0u); }
    leaf0.push_back(c.bridge_masses[0] + rng.normal() / 64.0);
  }
  // Bridge leaf plus the carried total mass: variance 2^-6.
  const Summary s = summarize(leaf0);
  EXPECT_NEAR(s.variance, 1.0 / 64, 4 * std::sqrt(2.0 / leaf0.size()) / 64);
}

TEST(CoupleCell, ConservesCountsAtEveryLevel) {
  const BinaryExpansion e(2, 8);
  for (std::uint64_t r = 0; r < 50; ++r) {
    RngStream rng(5, r);
    const std::uint64_t n = 10 + 37 * r;
    const auto c = couple_cell(n, e, 5, rng);
    std::uint64_t total = 0;
    for (auto v : c.leaf_counts) total += v;
    ASSERT_EQ(total, n);
    ASSERT_EQ(c.points.size(), 2 * n);
    double mass = 0;
    for (double v : c.bridge_masses) mass += v;
    ASSERT_NEAR(mass, 0.0, 1e-12);
    for (const auto& s : c.record) {
      if (s.coupled) { ASSERT_LE(s.left_count, s.count); }
    }
    // Parent count equals the sum of its children along the recorded tree.
    std::vector<std::vector<std::uint64_t>> level_counts(6);
    for (const auto& s : c.record) {
      if (s.coupled) level_counts[s.level].push_back(s.count);
    }
    for (int j = 0; j + 1 < 5; ++j) {
      for (std::size_t k = 0; k < level_counts[j].size(); ++k) {
        ASSERT_EQ(level_counts[j][k], level_counts[j + 1][2 * k] + level_counts[j + 1][2 * k + 1]);
      }
    }
  }
}

TEST(CoupleCell, PointsUniformOnCoupledCells) {
  const BinaryExpansion e(2, 6);
  const int m = 4;
  std::vector<double> bins(e.cells_at(m), 0.0);
  double total = 0;
  BinomialHalfCoupler binomial;
  for (std::uint64_t r = 0; r < 10000; ++r) {
    RngStream rng(6, r);
    const auto c = couple_cell(40, e, m, rng, binomial);
    for (std::size_t i = 0; i < c.points.size(); i += 2) {
      bins[e.locate(std::span<const double>(c.points.data() + i, 2), m)] += 1;
      total += 1;
    }
  }
  double chi2 = 0;
  const double expect = total / bins.size();
  for (double b : bins) chi2 += (b - expect) * (b - expect) / expect;
  EXPECT_GT(chi_square_sf(chi2, bins.size() - 1.0), 0.01);
}

TEST(CouplingDepth, DefaultLevels) {
  EXPECT_EQ(default_coupling_depth(16), 4);
  EXPECT_EQ(default_coupling_depth(64), 5);
  EXPECT_EQ(default_coupling_depth(256), 7);
  EXPECT_EQ(default_coupling_depth(1024), 9);
  EXPECT_EQ(default_coupling_depth(1e30), 24);
}

class CoupledFields : public ::testing::Test {
 protected:
  static constexpr double kEps = 1.0 / 16;
  const AnyKernel kernel = Kernel::rational(2, 3.0);
  const double pad = required_pad_radius(kernel, MultiIndex::zero());
};

TEST_F(CoupledFields, MarginalVariancesMatchOracle) {
  const FieldCoupler coupler(kernel, GridSpec(BoxRegion::square(0, 1), kEps), pad, 64, 5);
  std::vector<double> shot(400), gauss(400);
  for (std::uint64_t r = 0; r < shot.size(); ++r) {
    const auto pair = coupler.sample(7, r);
    shot[r] = pair.shot.at(3, 5);
    gauss[r] = pair.gauss.at(3, 5);
  }
  const double k0 = kPi / 2;
  for (const auto& v : {shot, gauss}) {
    const Summary s = summarize(v);
    EXPECT_NEAR(s.mean, 0.0, 4 * s.std_error);
    EXPECT_NEAR(s.variance, k0, 4 * k0 * std::sqrt(2.0 / v.size()));
  }
  // The pair is strongly coupled, not just two valid marginals.
  EXPECT_GT(correlation(shot, gauss), 0.9);
}

TEST_F(CoupledFields, GaussianSideIsSharedAcrossIntensities) {
  const GridSpec grid(BoxRegion::square(0, 2), kEps);
  const auto low = FieldCoupler(kernel, grid, pad, 16, 4).sample(3, 5);
  const auto high = FieldCoupler(kernel, grid, pad, 256, 7).sample(3, 5);
  EXPECT_EQ(low.gauss.values, high.gauss.values);
  EXPECT_NE(low.shot.values, high.shot.values);
}

TEST_F(CoupledFields, RecordMatchesFields) {
  const auto pair = couple_fields(kernel, 16, GridSpec(BoxRegion::square(0, 1), kEps), 4, pad, 8, 0);
  ASSERT_FALSE(pair.cells.empty());
  const PoissonNormalCoupler c(16);
  for (const auto& cell : pair.cells) {
    ASSERT_EQ(cell.count, c(cell.normal));
    ASSERT_EQ(cell.cell.size(), 2u);
  }
  const auto again = couple_fields(kernel, 16, GridSpec(BoxRegion::square(0, 1), kEps), 4, pad, 8, 0);
  EXPECT_EQ(pair.shot.values, again.shot.values);
  EXPECT_EQ(pair.gauss.values, again.gauss.values);
}

TEST_F(CoupledFields, BeatsIndependentSynthesisAndImprovesWithIntensity) {
  const BoxRegion window = BoxRegion::square(0, 4);
  auto medians = [&](double lambda, std::vector<double>* diffs) {
    const FieldCoupler coupler(kernel, GridSpec(window, kEps), pad, lambda, default_coupling_depth(lambda));
    std::vector<double> coupled(200), indep(200);
    for (std::uint64_t r = 0; r < coupled.size(); ++r) {
      const auto pair = coupler.sample(9, r);
      RngStream rng(10, r, 0, StreamPurpose::white_noise);
      coupled[r] = sup_norm_diff(pair.shot, pair.gauss, window);
      indep[r] = sup_norm_diff(pair.shot, coupler.independent_gaussian(rng), window);
      if (diffs) diffs->push_back(indep[r] - coupled[r]);
    }
    return median(coupled);
  };
  std::vector<double> diffs;
  const double m64 = medians(64, &diffs);
  const Summary d = summarize(diffs);
  EXPECT_GT(d.mean, 3 * d.std_error);
  EXPECT_LT(medians(256, nullptr), medians(16, nullptr));
  EXPECT_GT(m64, 0.0);
}
