#include "shotperc/rng.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "shotperc/errors.hpp"

namespace shotperc {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ (mix64(v + kGolden) + 0x632be59bd9b4e019ULL + (h << 6) + (h >> 2)));
}

std::array<double, 257> make_log_factorial_table() {
  std::array<double, 257> t{};
  t[0] = 0.0;
  for (std::size_t k = 1; k < t.size(); ++k) t[k] = t[k - 1] + std::log(static_cast<double>(k));
  return t;
}

const std::array<double, 257> kLogFactorial = make_log_factorial_table();

}  // namespace

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double log_factorial(std::uint64_t k) {
  if (k < kLogFactorial.size()) return kLogFactorial[k];
  // Stirling series; at k > 256 the truncation error is far below 1e-16 relative.
  const double x = static_cast<double>(k) + 1.0;
  const double x2 = x * x;
  const double series = 1.0 / (12.0 * x) - 1.0 / (360.0 * x * x2) + 1.0 / (1260.0 * x * x2 * x2);
  return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + series;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t replica, std::uint64_t cell,
                     StreamPurpose purpose) {
  std::uint64_t h = mix64(seed ^ 0x5851f42d4c957f2dULL);
  h = hash_combine(h, replica);
  h = hash_combine(h, cell);
  h = hash_combine(h, static_cast<std::uint64_t>(purpose));
  key_ = h;
}

std::uint64_t RngStream::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

std::uint64_t RngStream::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw InvalidArgument("poisson: mean must be finite and >= 0");
  if (mean == 0.0) return 0;
  if (mean < 30.0) {
    // Sequential inversion.
    const double u = uniform();
    double p = std::exp(-mean);
    double cdf = p;
    std::uint64_t k = 0;
    while (u > cdf) {
      ++k;
      p *= mean / static_cast<double>(k);
      const double next = cdf + p;
      if (next == cdf) break;  // tail exhausted in double precision
      cdf = next;
    }
    return k;
  }
  // PTRS (Hormann 1993).
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform() - 0.5;
    const double v = uniform();
    const double us = 0.5 - std::fabs(u);
    const double kd = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(kd);
    if (kd < 0.0 || (us < 0.013 && v > us)) continue;
    const auto k = static_cast<std::uint64_t>(kd);
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -mean + kd * loglam - log_factorial(k)) {
      return k;
    }
  }
}

}  // namespace shotperc
