#include "shotperc/stats.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>

#include "shotperc/distributions.hpp"
#include "shotperc/errors.hpp"

namespace shotperc {

Summary summarize(std::span<const double> x) {
  Summary s;
  s.n = x.size();
  if (s.n == 0) return s;
  for (double v : x) s.mean += v;
  s.mean /= static_cast<double>(s.n);
  if (s.n < 2) return s;
  double ss = 0.0;
  for (double v : x) ss += (v - s.mean) * (v - s.mean);
  s.variance = ss / static_cast<double>(s.n - 1);
  s.std_error = std::sqrt(s.variance / static_cast<double>(s.n));
  return s;
}

double quantile(std::vector<double> x, double q) {
  if (x.empty()) throw InvalidArgument("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile level must be in [0, 1]");
  std::sort(x.begin(), x.end());
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

double median_std_error(std::vector<double> x) {
  if (x.size() < 2) throw InvalidArgument("median standard error needs two or more samples");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  const double spread = 0.5 * std::sqrt(n);
  auto at = [&](double rank) {
    return x[static_cast<std::size_t>(std::clamp(std::round(rank), 0.0, n - 1.0))];
  };
  return 0.5 * (at(0.5 * n + spread) - at(0.5 * n - spread));
}

double ks_distance_normal(std::vector<double> x, double mean, double sd) {
  if (x.empty() || !(sd > 0.0)) throw InvalidArgument("KS distance needs samples and sd > 0");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = normal_cdf((x[i] - mean) / sd);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("correlation needs paired samples");
  const Summary sx = summarize(x), sy = summarize(y);
  double c = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) c += (x[i] - sx.mean) * (y[i] - sy.mean);
  c /= static_cast<double>(x.size() - 1);
  return c / std::sqrt(sx.variance * sy.variance);
}

double chi_square_sf(double statistic, double dof) {
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

LinearFit fit_linear(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("linear fit needs paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw InvalidArgument("linear fit needs distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    sse += r * r;
  }
  f.r_squared = syy > 0.0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
  f.slope_std_error = x.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
  return f;
}

RateFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("fit_loglog: x and y differ in length");
  if (x.size() < 3) throw InvalidArgument("fit_loglog needs at least 3 points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidArgument("fit_loglog needs positive inputs");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const LinearFit lf = fit_linear(lx, ly);
  return {std::vector<double>(x.begin(), x.end()), std::vector<double>(y.begin(), y.end()),
          lf.slope, lf.intercept, lf.r_squared, lf.slope_std_error};
}

}  // namespace shotperc
