#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "shotperc/fft.hpp"
#include "shotperc/grid.hpp"
#include "shotperc/kernel.hpp"
#include "shotperc/point_process.hpp"
#include "shotperc/rng.hpp"

namespace shotperc {

// Largest power of two not above 0.1 * correlation_length(k).
double default_spacing(const AnyKernel& k);

// Absolute L2 tail tolerance used for the padding check: relative * ||d^alpha g||_2.
double pad_tail_tolerance(const AnyKernel& k, const MultiIndex& alpha, double relative = 1e-2);

// Smallest pad whose neglected L2 tail of d^alpha g is below pad_tail_tolerance;
// exactly r/2 for truncated kernels.
double required_pad_radius(const AnyKernel& k, const MultiIndex& alpha, double relative = 1e-2);

// Renders d^alpha g convolved with per-cell noise weights on a fixed grid.
//
// Noise cells are [origin + k eps, origin + (k+1) eps) with origin = lower - c eps,
// c = ceil(pad / eps). A site at lower + s eps sees cell k through the sample
// d^alpha g((s + c - k - 1/2) eps), for |s + c - k - 1/2| < c.
class Synthesizer {
 public:
  // Throws PreconditionError when pad_radius leaves an L2 tail above the tolerance.
  // With align_to_unit_cells the noise lattice is widened so that its origin and
  // far corner are integers (spacing must then divide 1).
  Synthesizer(AnyKernel kernel, MultiIndex alpha, GridSpec grid, double pad_radius,
              bool align_to_unit_cells = false, double relative_tail = 1e-2);

  const AnyKernel& kernel() const { return kernel_; }
  const MultiIndex& alpha() const { return alpha_; }
  const GridSpec& grid() const { return grid_; }
  int dimension() const { return grid_.dimension(); }
  double pad_radius() const { return pad_; }

  // Noise lattice geometry.
  const std::vector<std::size_t>& cell_shape() const { return cells_; }
  std::size_t cell_count() const { return cell_count_; }
  std::size_t cells_before() const { return before_; }
  // Box covered by the noise cells.
  const BoxRegion& padded_region() const { return padded_; }
  // Sum of the sampled stencil; lambda eps^d times this is the exact binned compensator.
  double stencil_sum() const { return stencil_sum_; }

  // Flat noise-cell index containing x (row-major over cell_shape()).
  std::size_t cell_of(std::span<const double> x) const;

  // (N_k - lambda eps^d) / sqrt(lambda) from binned points.
  std::vector<double> poisson_weights(const PointConfiguration& points) const;
  // I.i.d. N(0, eps^d) cell masses.
  std::vector<double> white_noise_weights(RngStream& rng) const;

  // Convolves weights with the stencil and restricts to the grid.
  GridField render(std::vector<double> weights, FieldLabel label) const;

  GridField shot_noise(double lambda, RngStream& rng) const;
  GridField gaussian(RngStream& rng) const;

  FieldLabel shot_label(double lambda) const;
  FieldLabel gaussian_label() const;

 private:
  AnyKernel kernel_;
  MultiIndex alpha_;
  GridSpec grid_;
  double pad_;
  std::vector<std::size_t> sites_;
  std::vector<std::size_t> cells_;
  std::size_t cell_count_ = 0;
  std::size_t before_ = 0;
  BoxRegion padded_;
  std::vector<std::size_t> fft_dims_;
  double stencil_sum_ = 0.0;
  std::shared_ptr<const CirculantConvolver> convolver_;
};

GridField synthesize_shot_noise(const AnyKernel& k, const MultiIndex& alpha, double lambda,
                                const GridSpec& grid, double pad_radius, RngStream& rng);
GridField synthesize_gaussian(const AnyKernel& k, const MultiIndex& alpha, const GridSpec& grid,
                              double pad_radius, RngStream& rng);

// Slow reference: (sum_i d^alpha g(x - p_i) - lambda * compensator) / sqrt(lambda), where
// compensator is the integral of d^alpha g(x - y) over the sampled region.
double shot_noise_exact(const AnyKernel& k, const MultiIndex& alpha, const PointConfiguration& points,
                        std::span<const double> x, double compensator);

}  // namespace shotperc
