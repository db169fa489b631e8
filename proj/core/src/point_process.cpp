#include "shotperc/point_process.hpp"

#include <cmath>

#include "shotperc/errors.hpp"

namespace shotperc {

PointConfiguration sample_poisson(const BoxRegion& region, double lambda, RngStream& rng) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("intensity must be > 0");
  PointConfiguration config{region, lambda, {}};
  const int d = region.dimension();
  const std::uint64_t n = rng.poisson(lambda * region.volume());
  config.coords.resize(n * static_cast<std::size_t>(d));
  for (std::uint64_t i = 0; i < n; ++i) {
    for (int a = 0; a < d; ++a) {
      config.coords[i * d + a] = region.lower(a) + region.extent(a) * rng.uniform();
    }
  }
  return config;
}

double compensated_integral(const PointConfiguration& config, const PointFunction& h,
                            double integral_h) {
  double sum = 0.0;
  for (std::size_t i = 0; i < config.size(); ++i) sum += h(config.point(i));
  return (sum - config.intensity * integral_h) / std::sqrt(config.intensity);
}

}  // namespace shotperc
