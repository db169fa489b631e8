#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "shotperc/errors.hpp"
#include "shotperc/parallel.hpp"
#include "shotperc/rng.hpp"
#include "shotperc/stats.hpp"
#include "shotperc/union_find.hpp"

using namespace shotperc;

TEST(RngStream, SameKeySameSequence) {
  RngStream a(42, 3, 7, StreamPurpose::points);
  RngStream b(42, 3, 7, StreamPurpose::points);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, KeyComponentsSeparateStreams) {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t seed : {1u, 2u}) {
    for (std::uint64_t rep : {0u, 1u}) {
      for (std::uint64_t cell : {0u, 1u}) {
        for (auto p : {StreamPurpose::points, StreamPurpose::white_noise, StreamPurpose::coupling}) {
          firsts.insert(RngStream(seed, rep, cell, p).next_u64());
        }
      }
    }
  }
  EXPECT_EQ(firsts.size(), 24u);
}

TEST(RngStream, UniformInOpenInterval) {
  RngStream r(5, 0);
  Summary s;
  std::vector<double> x(100000);
  for (double& v : x) {
    v = r.uniform();
    ASSERT_GT(v, 0.0);
    ASSERT_LT(v, 1.0);
  }
  s = summarize(x);
  EXPECT_NEAR(s.mean, 0.5, 4 * s.std_error);
  EXPECT_NEAR(s.variance, 1.0 / 12.0, 2e-3);
}

TEST(RngStream, NormalMoments) {
  RngStream r(9, 1);
  std::vector<double> x(200000);
  for (double& v : x) v = r.normal();
  const Summary s = summarize(x);
  EXPECT_NEAR(s.mean, 0.0, 4 * s.std_error);
  EXPECT_NEAR(s.variance, 1.0, 0.015);
  EXPECT_LT(ks_distance_normal(x, 0.0, 1.0), 0.005);
}

class PoissonMoments : public ::testing::TestWithParam<double> {};

TEST_P(PoissonMoments, MeanAndVarianceMatch) {
  const double mean = GetParam();
  RngStream r(11, static_cast<std::uint64_t>(mean * 10));
  std::vector<double> x(100000);
  for (double& v : x) v = static_cast<double>(r.poisson(mean));
  const Summary s = summarize(x);
  EXPECT_NEAR(s.mean, mean, 4 * s.std_error);
  EXPECT_NEAR(s.variance / mean, 1.0, 0.03);
}

// Both sides of the inversion / PTRS switch.
INSTANTIATE_TEST_SUITE_P(Regimes, PoissonMoments, ::testing::Values(0.3, 4.0, 29.0, 31.0, 500.0));

TEST(RngStream, PoissonRejectsBadMean) {
  RngStream r(1, 0);
  EXPECT_THROW(r.poisson(-1.0), InvalidArgument);
  EXPECT_THROW(r.poisson(std::nan("")), InvalidArgument);
  EXPECT_EQ(r.poisson(0.0), 0u);
}

TEST(LogFactorial, MatchesLgammaAcrossTableEdge) {
  for (std::uint64_t k : {0u, 1u, 10u, 256u, 257u, 1000u, 100000u}) {
    EXPECT_NEAR(log_factorial(k), std::lgamma(static_cast<double>(k) + 1.0), 1e-9 * (1.0 + k));
  }
}

TEST(ParallelFor, EveryIndexOnce) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(ParallelFor, RethrowsLowestFailingIndex) {
  try {
    parallel_for(100, 3, [](std::size_t i) {
      if (i == 17 || i == 60) throw std::runtime_error(std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "17");
  }
}

TEST(UnionFind, MergesAndCounts) {
  UnionFind uf(6);
  EXPECT_TRUE(uf.unite(0, 1));
  EXPECT_TRUE(uf.unite(2, 3));
  EXPECT_FALSE(uf.unite(1, 0));
  EXPECT_TRUE(uf.unite(1, 3));
  EXPECT_TRUE(uf.connected(0, 2));
  EXPECT_FALSE(uf.connected(0, 4));
}
