#include "shotperc/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "shotperc/errors.hpp"

namespace shotperc {

namespace {

constexpr double kSlack = 1e-9;

bool is_truncated(const AnyKernel& k) { return std::holds_alternative<TruncatedKernel>(k); }

double truncation_range(const AnyKernel& k) {
  return is_truncated(k) ? std::get<TruncatedKernel>(k).range() : 0.0;
}

}  // namespace

double default_spacing(const AnyKernel& k) {
  const double target = 0.1 * correlation_length(k);
  return std::exp2(std::floor(std::log2(target)));
}

double pad_tail_tolerance(const AnyKernel& k, const MultiIndex& alpha, double relative) {
  return relative * std::sqrt(derivative_energy(k, alpha));
}

double required_pad_radius(const AnyKernel& k, const MultiIndex& alpha, double relative) {
  if (is_truncated(k)) return support_radius(k);
  return radius_for_l2_tail(k, alpha.order(), pad_tail_tolerance(k, alpha, relative));
}

Synthesizer::Synthesizer(AnyKernel kernel, MultiIndex alpha, GridSpec grid, double pad_radius,
                         bool align_to_unit_cells, double relative_tail)
    : kernel_(std::move(kernel)), alpha_(alpha), grid_(std::move(grid)), pad_(pad_radius) {
  const int d = grid_.dimension();
  if (d != kernel_dimension(kernel_)) throw InvalidArgument("grid and kernel dimension differ");
  if (!(pad_radius > 0.0)) throw InvalidArgument("pad radius must be > 0");
  if (is_truncated(kernel_)) {
    if (pad_radius < support_radius(kernel_) - kSlack) {
      std::ostringstream os;
      os << "pad radius " << pad_radius << " below the truncated kernel support; required "
         << support_radius(kernel_);
      throw PreconditionError(os.str());
    }
  } else {
    const double tol = pad_tail_tolerance(kernel_, alpha_, relative_tail);
    if (l2_tail_bound(kernel_, alpha_.order(), pad_radius) >= tol) {
      std::ostringstream os;
      os << "pad radius " << pad_radius << " leaves an L2 kernel tail above " << tol
         << "; required pad radius " << required_pad_radius(kernel_, alpha_, relative_tail);
      throw PreconditionError(os.str());
    }
  }
  const double eps = grid_.spacing;
  sites_ = grid_.shape();
  auto c = static_cast<std::size_t>(std::ceil(pad_radius / eps - kSlack));
  c = std::max<std::size_t>(c, 1);
  std::vector<std::size_t> extra_after(d, 0);
  if (align_to_unit_cells) {
    const double per_unit = 1.0 / eps;
    if (std::fabs(per_unit - std::round(per_unit)) > kSlack) {
      throw InvalidArgument("unit-cell alignment needs a spacing that divides 1");
    }
    const auto cells_per_unit = static_cast<std::size_t>(std::llround(per_unit));
    for (int a = 0; a < d; ++a) {
      const double offset = grid_.region.lower(a) / eps;
      if (std::fabs(offset - std::round(offset)) > 1e-6) {
        throw InvalidArgument("unit-cell alignment needs a grid lower corner on the eps lattice");
      }
    }
    // Widen c until every axis origin lower - c eps is an integer.
    for (;;) {
      bool ok = true;
      for (int a = 0; a < d; ++a) {
        const long k = std::lround(grid_.region.lower(a) / eps) - static_cast<long>(c);
        ok = ok && (k % static_cast<long>(cells_per_unit) == 0);
      }
      if (ok) break;
      ++c;
    }
    for (int a = 0; a < d; ++a) {
      const std::size_t m = sites_[a] + 2 * c - 1;
      extra_after[a] = (cells_per_unit - m % cells_per_unit) % cells_per_unit;
    }
  }
  before_ = c;
  cells_.resize(d);
  fft_dims_.resize(d);
  std::vector<double> lo(d), hi(d);
  cell_count_ = 1;
  std::size_t fft_size = 1;
  for (int a = 0; a < d; ++a) {
    cells_[a] = sites_[a] + 2 * c - 1 + extra_after[a];
    fft_dims_[a] = next_fast_size(cells_[a]);
    cell_count_ *= cells_[a];
    fft_size *= fft_dims_[a];
    lo[a] = grid_.region.lower(a) - static_cast<double>(c) * eps;
    hi[a] = lo[a] + static_cast<double>(cells_[a]) * eps;
  }
  padded_ = BoxRegion(lo, hi);

  // Stencil d^alpha g((n - 1/2) eps), n in [-c+1, c], placed circularly.
  std::vector<double> stencil(fft_size, 0.0);
  const long cl = static_cast<long>(c);
  std::vector<long> n(d, -cl + 1);
  std::vector<double> x(d);
  stencil_sum_ = 0.0;
  for (;;) {
    std::size_t flat = 0;
    for (int a = 0; a < d; ++a) {
      x[a] = (static_cast<double>(n[a]) - 0.5) * eps;
      const long p = static_cast<long>(fft_dims_[a]);
      flat = flat * fft_dims_[a] + static_cast<std::size_t>(((n[a] % p) + p) % p);
    }
    const double v = eval_kernel(kernel_, alpha_, x);
    stencil[flat] = v;
    stencil_sum_ += v;
    int a = d - 1;
    while (a >= 0) {
      if (n[a] < cl) {
        ++n[a];
        break;
      }
      n[a] = -cl + 1;
      --a;
    }
    if (a < 0) break;
  }
  convolver_ = std::make_shared<const CirculantConvolver>(fft_dims_, stencil);
}

std::size_t Synthesizer::cell_of(std::span<const double> x) const {
  std::size_t flat = 0;
  for (int a = 0; a < dimension(); ++a) {
    const double t = (x[a] - padded_.lower(a)) / grid_.spacing;
    auto k = static_cast<long>(std::floor(t));
    k = std::clamp(k, 0L, static_cast<long>(cells_[a]) - 1);
    flat = flat * cells_[a] + static_cast<std::size_t>(k);
  }
  return flat;
}

std::vector<double> Synthesizer::poisson_weights(const PointConfiguration& points) const {
  if (!(points.region == padded_)) {
    throw InvalidArgument("points must be sampled on the synthesizer's padded region");
  }
  std::vector<double> w(cell_count_, 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) w[cell_of(points.point(i))] += 1.0;
  const double lambda = points.intensity;
  const double mean = lambda * std::pow(grid_.spacing, dimension());
  const double scale = 1.0 / std::sqrt(lambda);
  for (double& v : w) v = (v - mean) * scale;
  return w;
}

std::vector<double> Synthesizer::white_noise_weights(RngStream& rng) const {
  std::vector<double> w(cell_count_);
  const double sd = std::pow(grid_.spacing, 0.5 * dimension());
  for (double& v : w) v = sd * rng.normal();
  return w;
}

GridField Synthesizer::render(std::vector<double> weights, FieldLabel label) const {
  if (weights.size() != cell_count_) throw InvalidArgument("weight count does not match the noise lattice");
  const int d = dimension();
  std::vector<double> buffer(convolver_->size(), 0.0);
  // Scatter cells into the (possibly larger) FFT lattice.
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t i = 0; i < cell_count_; ++i) {
    std::size_t rem = i, flat = 0;
    for (int a = d - 1; a >= 0; --a) {
      idx[a] = rem % cells_[a];
      rem /= cells_[a];
    }
    for (int a = 0; a < d; ++a) flat = flat * fft_dims_[a] + idx[a];
    buffer[flat] = weights[i];
  }
  convolver_->apply(buffer);
  GridField out;
  out.grid = grid_;
  out.label = label;
  out.derivative = alpha_;
  out.values.resize(grid_.site_count());
  for (std::size_t s = 0; s < out.values.size(); ++s) {
    std::size_t rem = s, flat = 0;
    for (int a = d - 1; a >= 0; --a) {
      idx[a] = rem % sites_[a] + before_;
      rem /= sites_[a];
    }
    for (int a = 0; a < d; ++a) flat = flat * fft_dims_[a] + idx[a];
    out.values[s] = buffer[flat];
  }
  return out;
}

FieldLabel Synthesizer::shot_label(double lambda) const {
  if (is_truncated(kernel_)) {
    return {FieldKind::truncated_shot_noise, lambda, truncation_range(kernel_)};
  }
  return {FieldKind::shot_noise, lambda, 0.0};
}

FieldLabel Synthesizer::gaussian_label() const {
  if (is_truncated(kernel_)) return {FieldKind::truncated_gaussian, 0.0, truncation_range(kernel_)};
  return {FieldKind::gaussian, 0.0, 0.0};
}

GridField Synthesizer::shot_noise(double lambda, RngStream& rng) const {
  const PointConfiguration points = sample_poisson(padded_, lambda, rng);
  return render(poisson_weights(points), shot_label(lambda));
}

GridField Synthesizer::gaussian(RngStream& rng) const {
  return render(white_noise_weights(rng), gaussian_label());
}

GridField synthesize_shot_noise(const AnyKernel& k, const MultiIndex& alpha, double lambda,
                                const GridSpec& grid, double pad_radius, RngStream& rng) {
  return Synthesizer(k, alpha, grid, pad_radius).shot_noise(lambda, rng);
}

GridField synthesize_gaussian(const AnyKernel& k, const MultiIndex& alpha, const GridSpec& grid,
                              double pad_radius, RngStream& rng) {
  return Synthesizer(k, alpha, grid, pad_radius).gaussian(rng);
}

double shot_noise_exact(const AnyKernel& k, const MultiIndex& alpha, const PointConfiguration& points,
                        std::span<const double> x, double compensator) {
  const int d = points.dimension();
  std::vector<double> diff(d);
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto p = points.point(i);
    for (int a = 0; a < d; ++a) diff[a] = x[a] - p[a];
    sum += eval_kernel(k, alpha, diff);
  }
  return (sum - points.intensity * compensator) / std::sqrt(points.intensity);
}

}  // namespace shotperc
