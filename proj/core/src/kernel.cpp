#include "shotperc/kernel.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

#include "shotperc/errors.hpp"
#include "shotperc/fft.hpp"

namespace shotperc {

namespace {

constexpr double kPi = std::numbers::pi;

// Relative tolerances much below 1e-10 sit at the roundoff floor of the error
// estimate and force bisection to the depth limit.
template <class F>
double gk(F&& f, double a, double b, double tol = 1e-13) {
  if (!(b > a)) return 0.0;
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 12, std::max(tol, 1e-10), &err);
}

// int_a^inf f(r) dr: dyadic shells out to 2^24 * max(a, 1), then r = 1/t for the rest.
template <class F>
double integrate_outward(F&& f, double a, double tol = 1e-13) {
  double total = 0.0;
  double lo = a;
  double width = std::max(1.0, a);
  const double stop = std::ldexp(std::max(1.0, a), 24);
  while (lo < stop) {
    total += gk(f, lo, lo + width, tol);
    lo += width;
    width *= 2.0;
  }
  const double tail = gk([&](double t) { return t > 0.0 ? f(1.0 / t) / (t * t) : 0.0; }, 0.0,
                         1.0 / lo, tol);
  return total + tail;
}

// int_0^upper f(r) dr for radial integrands; upper may be +inf.
template <class F>
double radial(F&& f, double upper = std::numeric_limits<double>::infinity(), double tol = 1e-13) {
  if (std::isfinite(upper)) {
    // Split at dyadic radii so the adaptive rule sees the near-origin structure.
    double total = 0.0;
    double lo = 0.0;
    double hi = std::min(upper, 1.0);
    while (lo < upper) {
      total += gk(f, lo, hi, tol);
      lo = hi;
      hi = std::min(upper, hi * 2.0);
    }
    return total;
  }
  return gk(f, 0.0, 1.0, tol) + integrate_outward(f, 1.0, tol);
}

void check_alpha(const MultiIndex& alpha, int dimension) {
  for (int a = 0; a < kMaxDimension; ++a) {
    if (alpha.counts[a] < 0) throw InvalidArgument("multi-index entries must be nonnegative");
    if (a >= dimension && alpha.counts[a] != 0) {
      throw InvalidArgument("multi-index refers to an axis beyond the kernel dimension");
    }
  }
  if (alpha.order() > Kernel::derivative_order_max()) {
    throw InvalidArgument("unsupported derivative order " + std::to_string(alpha.order()) +
                          " (maximum is 2)");
  }
}

// Derivatives of a radial function g(x) = P(|x|^2).
template <class Profile>
double eval_radial(const Profile& profile, int dimension, const MultiIndex& alpha,
                   std::span<const double> x) {
  check_alpha(alpha, dimension);
  if (static_cast<int>(x.size()) != dimension) throw InvalidArgument("point dimension mismatch");
  double s = 0.0;
  for (double xi : x) s += xi * xi;
  switch (alpha.order()) {
    case 0:
      return profile(s, 0);
    case 1: {
      int a = 0;
      while (alpha.counts[a] == 0) ++a;
      return 2.0 * x[a] * profile(s, 1);
    }
    default: {
      int a = -1, b = -1;
      for (int i = 0; i < dimension; ++i) {
        for (int c = 0; c < alpha.counts[i]; ++c) (a < 0 ? a : b) = i;
      }
      return 4.0 * x[a] * x[b] * profile(s, 2) + (a == b ? 2.0 * profile(s, 1) : 0.0);
    }
  }
}

template <class Profile>
double envelope_from_profile(const Profile& profile, int order, double rho) {
  const double s = rho * rho;
  switch (order) {
    case 0:
      return std::fabs(profile(s, 0));
    case 1:
      return 2.0 * rho * std::fabs(profile(s, 1));
    case 2:
      return 4.0 * s * std::fabs(profile(s, 2)) + 2.0 * std::fabs(profile(s, 1));
    default:
      throw InvalidArgument("unsupported derivative order");
  }
}

}  // namespace

std::string MultiIndex::to_string() const {
  std::ostringstream os;
  os << "(" << counts[0] << "," << counts[1] << "," << counts[2] << ")";
  return os.str();
}

Kernel Kernel::rational(int dimension, double beta) {
  if (dimension < 1 || dimension > kMaxDimension) throw InvalidArgument("kernel dimension must be 1..3");
  if (!(beta > dimension) || !std::isfinite(beta)) {
    throw InvalidArgument("rational kernel requires beta > d (got beta=" + std::to_string(beta) +
                          ", d=" + std::to_string(dimension) + ")");
  }
  return Kernel(KernelFamily::rational, dimension, beta);
}

Kernel Kernel::stretched_exp(int dimension, double gamma) {
  if (dimension < 1 || dimension > kMaxDimension) throw InvalidArgument("kernel dimension must be 1..3");
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw InvalidArgument("stretched_exp kernel requires gamma in (0,1) (got " +
                          std::to_string(gamma) + ")");
  }
  return Kernel(KernelFamily::stretched_exp, dimension, gamma);
}

double Kernel::profile(double s, int derivative) const {
  const double base = 1.0 + s;
  if (family_ == KernelFamily::rational) {
    const double h = 0.5 * parameter_;
    switch (derivative) {
      case 0:
        return std::pow(base, -h);
      case 1:
        return -h * std::pow(base, -h - 1.0);
      case 2:
        return h * (h + 1.0) * std::pow(base, -h - 2.0);
      default:
        throw InvalidArgument("unsupported derivative order");
    }
  }
  const double h = 0.5 * parameter_;
  const double u = std::pow(base, h);
  const double value = std::exp(1.0 - u);
  switch (derivative) {
    case 0:
      return value;
    case 1:
      return -h * u / base * value;
    case 2: {
      const double u1 = h * u / base;
      const double u2 = h * (h - 1.0) * u / (base * base);
      return (u1 * u1 - u2) * value;
    }
    default:
      throw InvalidArgument("unsupported derivative order");
  }
}

double Kernel::eval(const MultiIndex& alpha, std::span<const double> x) const {
  return eval_radial([this](double s, int k) { return profile(s, k); }, dimension_, alpha, x);
}

double Kernel::envelope(int order, double rho) const {
  return envelope_from_profile([this](double s, int k) { return profile(s, k); }, order, rho);
}

std::string Kernel::to_string() const {
  std::ostringstream os;
  os.precision(17);
  if (family_ == KernelFamily::rational) {
    os << "rational(d=" << dimension_ << ",beta=" << parameter_ << ")";
  } else {
    os << "stretched_exp(d=" << dimension_ << ",gamma=" << parameter_ << ")";
  }
  return os.str();
}

double CutoffFunction::profile(double rho, int derivative) {
  if (rho <= inner_radius) return derivative == 0 ? 1.0 : 0.0;
  if (rho >= outer_radius) return 0.0;
  const double w = outer_radius - inner_radius;
  const double t = (rho - inner_radius) / w;
  switch (derivative) {
    case 0:
      return 1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
    case 1:
      return -30.0 * t * t * (1.0 - t) * (1.0 - t) / w;
    case 2:
      return -60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (w * w);
    default:
      throw InvalidArgument("unsupported derivative order");
  }
}

TruncatedKernel::TruncatedKernel(Kernel base, double range) : base_(base), range_(range) {
  if (!(range > 0.0) || !std::isfinite(range)) throw InvalidArgument("truncation range must be > 0");
}

double TruncatedKernel::profile(double s, int derivative) const {
  const double rho = std::sqrt(s) / range_;
  if (rho >= CutoffFunction::outer_radius) return 0.0;
  const double psi = CutoffFunction::profile(rho, 0);
  if (rho <= CutoffFunction::inner_radius) return base_.profile(s, derivative) * psi;
  const double dpsi = CutoffFunction::profile(rho, 1);
  const double rs = std::sqrt(s);
  const double rho_s = 0.5 / (range_ * rs);
  switch (derivative) {
    case 0:
      return base_.profile(s, 0) * psi;
    case 1:
      return base_.profile(s, 1) * psi + base_.profile(s, 0) * dpsi * rho_s;
    case 2: {
      const double d2psi = CutoffFunction::profile(rho, 2);
      const double rho_ss = -0.25 / (range_ * rs * s);
      return base_.profile(s, 2) * psi + 2.0 * base_.profile(s, 1) * dpsi * rho_s +
             base_.profile(s, 0) * (d2psi * rho_s * rho_s + dpsi * rho_ss);
    }
    default:
      throw InvalidArgument("unsupported derivative order");
  }
}

double TruncatedKernel::eval(const MultiIndex& alpha, std::span<const double> x) const {
  return eval_radial([this](double s, int k) { return profile(s, k); }, dimension(), alpha, x);
}

double TruncatedKernel::envelope(int order, double rho) const {
  return envelope_from_profile([this](double s, int k) { return profile(s, k); }, order, rho);
}

std::string TruncatedKernel::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << "truncated(" << base_.to_string() << ",r=" << range_ << ")";
  return os.str();
}

int kernel_dimension(const AnyKernel& k) {
  return std::visit([](const auto& v) { return v.dimension(); }, k);
}

double support_radius(const AnyKernel& k) {
  if (const auto* t = std::get_if<TruncatedKernel>(&k)) return t->support_radius();
  return std::numeric_limits<double>::infinity();
}

std::string kernel_label(const AnyKernel& k) {
  return std::visit([](const auto& v) { return v.to_string(); }, k);
}

double eval_kernel(const AnyKernel& k, const MultiIndex& alpha, std::span<const double> x) {
  return std::visit([&](const auto& v) { return v.eval(alpha, x); }, k);
}

double kernel_profile(const AnyKernel& k, double s, int derivative) {
  return std::visit([&](const auto& v) { return v.profile(s, derivative); }, k);
}

double kernel_envelope(const AnyKernel& k, int order, double rho) {
  return std::visit([&](const auto& v) { return v.envelope(order, rho); }, k);
}

double decay_exponent(const AnyKernel& k) {
  const Kernel& base = std::holds_alternative<Kernel>(k) ? std::get<Kernel>(k)
                                                          : std::get<TruncatedKernel>(k).base();
  if (base.family() == KernelFamily::rational) return base.parameter();
  return base.dimension() + 1.0;
}

double decay_constant(const AnyKernel& k, int order) {
  const double beta = decay_exponent(k);
  double sup = 0.0;
  auto probe = [&](double rho) {
    sup = std::max(sup, kernel_envelope(k, order, rho) * std::pow(1.0 + rho, beta));
  };
  for (int i = 0; i <= 20000; ++i) probe(i * 1e-3);
  for (int i = 0; i <= 20000; ++i) probe(20.0 * std::pow(10.0, i * 6.0 / 20000.0));
  return 1.02 * sup;
}

double sphere_area(int dimension) {
  const double h = 0.5 * dimension;
  return 2.0 * std::pow(kPi, h) / std::tgamma(h);
}

KernelIntegrals kernel_integral(const AnyKernel& k) {
  const int d = kernel_dimension(k);
  if (const auto* base = std::get_if<Kernel>(&k)) {
    if (base->family() == KernelFamily::rational && !(base->parameter() > d)) {
      throw InvalidArgument("kernel is not integrable (beta <= d)");
    }
  }
  const double area = sphere_area(d);
  const double upper = support_radius(k);
  auto first = [&](double r) { return std::pow(r, d - 1) * kernel_profile(k, r * r, 0); };
  auto second = [&](double r) {
    const double g = kernel_profile(k, r * r, 0);
    return std::pow(r, d - 1) * g * g;
  };
  return {area * radial(first, upper), area * radial(second, upper)};
}

double derivative_energy(const AnyKernel& k, const MultiIndex& alpha) {
  const int d = kernel_dimension(k);
  check_alpha(alpha, d);
  const double area = sphere_area(d);
  const double upper = support_radius(k);
  const double m2 = 1.0 / d;
  const double m4 = 3.0 / (d * (d + 2.0));
  const double m22 = 1.0 / (d * (d + 2.0));
  const int order = alpha.order();
  bool same_axis = false;
  if (order == 2) {
    for (int a = 0; a < d; ++a) same_axis = same_axis || alpha.counts[a] == 2;
  }
  auto integrand = [&](double r) {
    const double s = r * r;
    const double w = std::pow(r, d - 1);
    if (order == 0) {
      const double g = kernel_profile(k, s, 0);
      return w * g * g;
    }
    const double p1 = kernel_profile(k, s, 1);
    if (order == 1) return w * 4.0 * s * p1 * p1 * m2;
    const double p2 = kernel_profile(k, s, 2);
    if (!same_axis) return w * 16.0 * s * s * p2 * p2 * m22;
    return w * (16.0 * s * s * p2 * p2 * m4 + 16.0 * s * p1 * p2 * m2 + 4.0 * p1 * p1);
  };
  return area * radial(integrand, upper);
}

double l2_tail_bound(const AnyKernel& k, int order, double radius) {
  const int d = kernel_dimension(k);
  const double upper = support_radius(k);
  if (radius >= upper) return 0.0;
  auto integrand = [&](double r) {
    const double e = kernel_envelope(k, order, r);
    return std::pow(r, d - 1) * e * e;
  };
  double value = 0.0;
  if (std::isfinite(upper)) {
    value = gk(integrand, radius, upper, 1e-12);
  } else {
    value = integrate_outward(integrand, std::max(radius, 1e-12), 1e-12);
  }
  return std::sqrt(std::max(0.0, sphere_area(d) * value));
}

double radius_for_l2_tail(const AnyKernel& k, int order, double tol) {
  if (!(tol > 0.0)) throw InvalidArgument("tail tolerance must be > 0");
  if (std::holds_alternative<TruncatedKernel>(k)) return support_radius(k);
  double hi = 1.0;
  while (l2_tail_bound(k, order, hi) >= tol) {
    hi *= 2.0;
    if (hi > 1e7) throw PreconditionError("kernel tail too heavy for the requested tolerance");
  }
  double lo = 0.0;
  while (hi - lo > 1e-3 * hi) {
    const double mid = 0.5 * (lo + hi);
    (l2_tail_bound(k, order, mid) < tol ? hi : lo) = mid;
  }
  return hi;
}

double correlation_length(const AnyKernel& k) {
  const double k0 = kernel_integral(k).integral_squared;
  const double k2 = derivative_energy(k, MultiIndex::axis(0));
  return std::sqrt(k0 / k2);
}

double covariance_quadrature(const AnyKernel& k, std::span<const double> lag) {
  const int d = kernel_dimension(k);
  if (static_cast<int>(lag.size()) != d) throw InvalidArgument("lag dimension mismatch");
  double norm2 = 0.0;
  for (double v : lag) norm2 += v * v;
  const double dist = std::sqrt(norm2);
  const double reach = support_radius(k);
  auto g = [&](double s) { return kernel_profile(k, s, 0); };

  if (d == 1) {
    // int g(y) g(dist - y) dy, split at the two peaks.
    auto f = [&](double y) { return g(y * y) * g((dist - y) * (dist - y)); };
    const double lo = 0.0, hi = dist;
    double total = gk(f, lo, hi, 1e-14);
    if (std::isfinite(reach)) {
      total += gk(f, hi, hi + reach, 1e-14) + gk(f, lo - reach, lo, 1e-14);
    } else {
      total += integrate_outward([&](double t) { return f(hi + t); }, 0.0, 1e-14);
      total += integrate_outward([&](double t) { return f(lo - t); }, 0.0, 1e-14);
    }
    return total;
  }
  if (d != 2) throw InvalidArgument("covariance quadrature implemented for d = 1, 2");

  // Polar coordinates about the midpoint x/2; the integrand is symmetric under
  // theta -> -theta and theta -> pi - theta, so a quarter turn suffices.
  const double b = 0.5 * dist;
  auto inner = [&](double rho) {
    if (rho == 0.0) return 0.0;
    const double base = b * b + rho * rho;
    auto angular = [&](double theta) {
      const double c = 2.0 * b * rho * std::cos(theta);
      return g(std::max(0.0, base + c)) * g(std::max(0.0, base - c));
    };
    return 4.0 * rho * gk(angular, 0.0, 0.5 * kPi, 1e-14);
  };
  double total = 0.0;
  if (b > 0.0) total += gk(inner, 0.0, b, 1e-13);
  if (std::isfinite(reach)) {
    // Beyond rho = b + reach both factors cannot be nonzero.
    double lo = b, width = 0.5;
    while (lo < b + reach) {
      const double hi = std::min(b + reach, lo + width);
      total += gk(inner, lo, hi, 1e-13);
      lo = hi;
      width *= 2.0;
    }
  } else {
    total += integrate_outward([&](double t) { return inner(b + t); }, 0.0, 1e-13);
  }
  return total;
}

FftCovariance::FftCovariance(const AnyKernel& k, const CovarianceGrid& grid)
    : kernel_(k), grid_(grid), dimension_(kernel_dimension(k)) {
  if (dimension_ > 2) throw InvalidArgument("FFT covariance implemented for d = 1, 2");
  if (!(grid.spacing > 0.0) || !(grid.half_width > grid.spacing)) {
    throw InvalidArgument("covariance grid needs spacing > 0 and half_width > spacing");
  }
  half_points_ = std::lround(grid.half_width / grid.spacing);
  fft_side_ = next_fast_size(static_cast<std::size_t>(4 * half_points_ + 1));
  const std::vector<double> zero(dimension_, 0.0);
  unshifted_ = sample(zero);
  on_lattice_ = unshifted_;
  std::vector<std::size_t> dims(dimension_, fft_side_);
  CirculantConvolver conv(dims, unshifted_);
  conv.apply(on_lattice_);
  const double cell = std::pow(grid_.spacing, dimension_);
  for (double& v : on_lattice_) v *= cell;
}

std::vector<double> FftCovariance::sample(std::span<const double> shift) const {
  const std::size_t side = fft_side_;
  std::vector<double> out(dimension_ == 1 ? side : side * side, 0.0);
  const double h = grid_.spacing;
  const long n = half_points_;
  auto wrap = [&](long i) { return static_cast<std::size_t>((i % static_cast<long>(side) + side) % side); };
  if (dimension_ == 1) {
    for (long i = -n; i <= n; ++i) {
      const double x[1] = {h * i + shift[0]};
      out[wrap(i)] = eval_kernel(kernel_, MultiIndex::zero(), x);
    }
  } else {
    for (long i = -n; i <= n; ++i) {
      for (long j = -n; j <= n; ++j) {
        const double x[2] = {h * i + shift[0], h * j + shift[1]};
        out[wrap(i) * side + wrap(j)] = eval_kernel(kernel_, MultiIndex::zero(), x);
      }
    }
  }
  return out;
}

double FftCovariance::correlate(const std::vector<double>& table, std::span<const long> k) const {
  const std::size_t side = fft_side_;
  auto wrap = [&](long i) { return static_cast<std::size_t>((i % static_cast<long>(side) + side) % side); };
  if (dimension_ == 1) return table[wrap(k[0])];
  return table[wrap(k[0]) * side + wrap(k[1])];
}

double FftCovariance::operator()(std::span<const double> lag) const {
  if (static_cast<int>(lag.size()) != dimension_) throw InvalidArgument("lag dimension mismatch");
  const double h = grid_.spacing;
  std::vector<long> k(dimension_);
  std::vector<double> delta(dimension_);
  bool on_grid = true;
  for (int a = 0; a < dimension_; ++a) {
    k[a] = std::lround(lag[a] / h);
    delta[a] = lag[a] - h * k[a];
    if (std::fabs(delta[a]) > 1e-12 * h) on_grid = false;
    if (std::labs(k[a]) > half_points_ / 2) {
      throw InvalidArgument("lag exceeds half of the covariance grid half-width");
    }
  }
  if (on_grid) return correlate(on_lattice_, k);
  // (a * b)[k] with b[m] = g(h m + delta) gives sum_n g(h n) g(lag - h n).
  std::vector<double> shifted = sample(delta);
  std::vector<std::size_t> dims(dimension_, fft_side_);
  CirculantConvolver conv(dims, unshifted_);
  conv.apply(shifted);
  return std::pow(h, dimension_) * correlate(shifted, k);
}

double covariance(const AnyKernel& k, std::span<const double> lag, const CovarianceGrid& grid,
                  double tolerance) {
  const double quad = covariance_quadrature(k, lag);
  const double fft = FftCovariance(k, grid)(lag);
  if (!(std::fabs(quad - fft) <= tolerance)) {
    std::ostringstream os;
    os.precision(12);
    os << "covariance routes disagree at |lag|: quadrature " << quad << " vs FFT " << fft;
    throw NumericalConsistencyError(os.str());
  }
  return quad;
}

}  // namespace shotperc
