#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "shotperc/coupling.hpp"
#include "shotperc/distributions.hpp"
#include "shotperc/kernel.hpp"
#include "shotperc/percolation.hpp"
#include "shotperc/rng.hpp"
#include "shotperc/synthesis.hpp"

using namespace shotperc;

namespace {

const AnyKernel& kernel() {
  static const AnyKernel k = Kernel::rational(2, 3.0);
  return k;
}

double pad() {
  static const double p = required_pad_radius(kernel(), MultiIndex::zero());
  return p;
}

}  // namespace

// Gaussian field on an R x R box: white noise plus one FFT convolution.
static void BM_GaussianField(benchmark::State& state) {
  const double box = static_cast<double>(state.range(0));
  const Synthesizer s(kernel(), MultiIndex::zero(), GridSpec(BoxRegion::square(0, box), 1.0 / 16), pad());
  std::uint64_t r = 0;
  for (auto _ : state) {
    RngStream rng(1, r++, 0, StreamPurpose::white_noise);
    benchmark::DoNotOptimize(s.gaussian(rng));
  }
  state.counters["sites"] = static_cast<double>(s.grid().site_count());
}
BENCHMARK(BM_GaussianField)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_ShotNoiseField(benchmark::State& state) {
  const double lambda = static_cast<double>(state.range(0));
  const Synthesizer s(kernel(), MultiIndex::zero(), GridSpec(BoxRegion::square(0, 8), 1.0 / 16), pad());
  std::uint64_t r = 0;
  for (auto _ : state) {
    RngStream rng(2, r++, 0, StreamPurpose::points);
    benchmark::DoNotOptimize(s.shot_noise(lambda, rng));
  }
}
BENCHMARK(BM_ShotNoiseField)->Arg(16)->Arg(256)->Unit(benchmark::kMillisecond);

// Minimax crossing level of an R x R square by sorted union-find insertion.
static void BM_CrossingThreshold(benchmark::State& state) {
  const double box = static_cast<double>(state.range(0));
  const BoxRegion square = BoxRegion::square(0, box);
  const Synthesizer s(kernel(), MultiIndex::zero(), GridSpec(square, 1.0 / 16), pad());
  RngStream rng(3, 0, 0, StreamPurpose::white_noise);
  const GridField f = s.gaussian(rng);
  for (auto _ : state) benchmark::DoNotOptimize(crossing_threshold(f, square, Orientation::left_right));
  state.counters["sites"] = static_cast<double>(f.values.size());
}
BENCHMARK(BM_CrossingThreshold)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_CrossingAtLevel(benchmark::State& state) {
  const BoxRegion square = BoxRegion::square(0, 16);
  const Synthesizer s(kernel(), MultiIndex::zero(), GridSpec(square, 1.0 / 16), pad());
  RngStream rng(4, 0, 0, StreamPurpose::white_noise);
  const ExcursionSet ex = excursion(s.gaussian(rng), 0.0);
  const auto conn = state.range(0) == 0 ? Connectivity::primal : Connectivity::dual;
  for (auto _ : state) benchmark::DoNotOptimize(crossing(ex, square, Orientation::left_right, conn));
}
BENCHMARK(BM_CrossingAtLevel)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

// Dyadic coupling of one unit cell down to depth m.
static void BM_CoupleCell(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const double lambda = static_cast<double>(state.range(1));
  const BinaryExpansion e(2, 8);
  std::uint64_t r = 0;
  for (auto _ : state) {
    RngStream rng(5, r++, 0, StreamPurpose::coupling);
    const auto n = couple_poisson_gaussian(lambda, rng).first;
    benchmark::DoNotOptimize(couple_cell(n, e, m, rng));
  }
}
BENCHMARK(BM_CoupleCell)->Args({4, 16})->Args({7, 256})->Args({8, 1024});

static void BM_PoissonQuantile(benchmark::State& state) {
  const PoissonNormalCoupler c(static_cast<double>(state.range(0)));
  RngStream rng(6, 0);
  for (auto _ : state) benchmark::DoNotOptimize(c(rng.normal()));
}
BENCHMARK(BM_PoissonQuantile)->Arg(1)->Arg(64)->Arg(1024);

static void BM_PoissonSample(benchmark::State& state) {
  const double mean = static_cast<double>(state.range(0));
  RngStream rng(7, 0);
  for (auto _ : state) benchmark::DoNotOptimize(rng.poisson(mean));
}
BENCHMARK(BM_PoissonSample)->Arg(1)->Arg(64)->Arg(1024);
BENCHMARK_MAIN();
