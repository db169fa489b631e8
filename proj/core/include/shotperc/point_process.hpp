#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "shotperc/geometry.hpp"
#include "shotperc/rng.hpp"

namespace shotperc {

// Poisson sample on a box; coordinates stored flat, `dimension()` doubles per point.
struct PointConfiguration {
  BoxRegion region;
  double intensity = 0.0;
  std::vector<double> coords;

  int dimension() const { return region.dimension(); }
  std::size_t size() const { return coords.size() / static_cast<std::size_t>(dimension()); }
  std::span<const double> point(std::size_t i) const {
    return {coords.data() + i * static_cast<std::size_t>(dimension()),
            static_cast<std::size_t>(dimension())};
  }
};

// Count ~ Pois(lambda * Vol), then i.i.d. uniform positions.
PointConfiguration sample_poisson(const BoxRegion& region, double lambda, RngStream& rng);

using PointFunction = std::function<double(std::span<const double>)>;

// (sum_i h(x_i) - lambda * integral_h) / sqrt(lambda).
double compensated_integral(const PointConfiguration& config, const PointFunction& h,
                            double integral_h);

}  // namespace shotperc
