#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace shotperc {

// Standard normal CDF and survival function, both accurate deep in their tails.
double normal_cdf(double x);
double normal_sf(double x);

// Pois(lambda) pmf and CDF (log-space, stable for large lambda).
double poisson_pmf(double lambda, std::uint64_t n);
double poisson_cdf(double lambda, std::uint64_t n);

// Quantile coupling N = min{n : P[Pois(lambda) <= n] >= Phi(z)}. The pmf is tabulated
// once over the window carrying all but ~1e-300 of the mass; lower-tail z uses the CDF
// and upper-tail z the survival function, so neither tail loses precision.
class PoissonNormalCoupler {
 public:
  explicit PoissonNormalCoupler(double lambda);
  double lambda() const { return lambda_; }
  std::uint64_t operator()(double z) const;

 private:
  double lambda_;
  std::uint64_t first_ = 0;
  std::vector<double> lower_;  // lower_[i] = P[N <= first_ + i]
  std::vector<double> upper_;  // upper_[i] = P[N >= first_ + i]
};

// Quantile coupling K = min{k : P[Bin(n, 1/2) <= k] >= Phi(z)}. Tables of the lower half
// of each CDF are cached per n; z > 0 is mapped through the symmetry k -> n - k.
class BinomialHalfCoupler {
 public:
  std::uint64_t operator()(std::uint64_t n, double z);

 private:
  const std::vector<double>& table(std::uint64_t n);
  std::unordered_map<std::uint64_t, std::vector<double>> tables_;
};

}  // namespace shotperc
