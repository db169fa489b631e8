#include "shotperc/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "shotperc/errors.hpp"
#include "shotperc/rng.hpp"

namespace shotperc {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double poisson_pmf(double lambda, std::uint64_t n) {
  if (lambda == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(-lambda + static_cast<double>(n) * std::log(lambda) - log_factorial(n));
}

double poisson_cdf(double lambda, std::uint64_t n) {
  // Sum upward from the far lower tail; terms below ~1e-300 cannot matter.
  const double sd = std::sqrt(lambda);
  const double start = std::max(0.0, std::floor(lambda - 40.0 * sd - 40.0));
  double sum = 0.0;
  for (auto k = static_cast<std::uint64_t>(start); k <= n; ++k) sum += poisson_pmf(lambda, k);
  return std::min(1.0, sum);
}

PoissonNormalCoupler::PoissonNormalCoupler(double lambda) : lambda_(lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("Poisson mean must be > 0");
  const double sd = std::sqrt(lambda);
  const double lo = std::max(0.0, std::floor(lambda - 40.0 * sd - 40.0));
  const double hi = std::ceil(lambda + 40.0 * sd + 60.0);
  first_ = static_cast<std::uint64_t>(lo);
  const auto count = static_cast<std::size_t>(hi - lo) + 1;
  std::vector<double> pmf(count);
  for (std::size_t i = 0; i < count; ++i) pmf[i] = poisson_pmf(lambda, first_ + i);
  lower_.resize(count);
  upper_.resize(count + 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < count; ++i) lower_[i] = (acc += pmf[i]);
  acc = 0.0;
  upper_[count] = 0.0;
  for (std::size_t i = count; i-- > 0;) upper_[i] = (acc += pmf[i]);
}

std::uint64_t PoissonNormalCoupler::operator()(double z) const {
  if (z <= 0.0) {
    const double u = normal_cdf(z);
    const auto it = std::lower_bound(lower_.begin(), lower_.end(), u);
    return first_ + static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(it - lower_.begin(),
                                                                        lower_.size() - 1));
  }
  // CDF(n) >= 1 - s  <=>  P[N >= n + 1] <= s; upper_ is nonincreasing.
  const double s = normal_sf(z);
  std::size_t lo = 0, hi = lower_.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (upper_[mid + 1] <= s) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return first_ + lo;
}

const std::vector<double>& BinomialHalfCoupler::table(std::uint64_t n) {
  auto it = tables_.find(n);
  if (it != tables_.end()) return it->second;
  const std::uint64_t half = n / 2;
  std::vector<double> cdf(half + 1);
  const double log_norm = log_factorial(n) - static_cast<double>(n) * std::numbers::ln2;
  double acc = 0.0;
  for (std::uint64_t k = 0; k <= half; ++k) {
    acc += std::exp(log_norm - log_factorial(k) - log_factorial(n - k));
    cdf[k] = acc;
  }
  return tables_.emplace(n, std::move(cdf)).first->second;
}

std::uint64_t BinomialHalfCoupler::operator()(std::uint64_t n, double z) {
  if (n == 0) return 0;
  if (n > 1'000'000) throw InvalidArgument("binomial coupling supports n <= 1e6");
  const std::vector<double>& cdf = table(n);
  if (z <= 0.0) {
    const double u = normal_cdf(z);
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    // F(floor(n/2)) >= 1/2 >= u, so the search never runs off the table.
    return static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), cdf.size() - 1));
  }
  // Smallest k with F(k) >= 1 - s equals n - 1 - max{j : F(j) <= s}.
  const double s = normal_sf(z);
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), s);
  const auto count_le = static_cast<std::uint64_t>(it - cdf.begin());  // j_max + 1
  return n - count_le;
}

}  // namespace shotperc
