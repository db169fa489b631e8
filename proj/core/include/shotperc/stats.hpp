#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace shotperc {

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;   // unbiased
  double std_error = 0.0;  // of the mean
};

Summary summarize(std::span<const double> x);

// Linear-interpolated sample quantile, q in [0, 1].
double quantile(std::vector<double> x, double q);
double median(std::vector<double> x);
// Half the spread of the order statistics at ranks n/2 +- sqrt(n)/2.
double median_std_error(std::vector<double> x);

// sup |F_n - Phi((x - mean) / sd)|.
double ks_distance_normal(std::vector<double> x, double mean, double sd);

double correlation(std::span<const double> x, std::span<const double> y);

// Upper tail of the chi-square distribution.
double chi_square_sf(double statistic, double dof);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_std_error = 0.0;
};

LinearFit fit_linear(std::span<const double> x, std::span<const double> y);

struct RateFit {
  std::vector<double> x;
  std::vector<double> y;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_std_error = 0.0;
};

// Least squares on (log x, log y); needs >= 3 points, all positive.
RateFit fit_loglog(std::span<const double> x, std::span<const double> y);

}  // namespace shotperc
