#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace shotperc {

inline constexpr int kMaxDimension = 3;

// Partial derivative multi-index; only total order <= 2 is supported anywhere.
struct MultiIndex {
  std::array<int, kMaxDimension> counts{};

  static MultiIndex zero() { return {}; }
  static MultiIndex axis(int a) {
    MultiIndex m;
    m.counts[a] = 1;
    return m;
  }
  static MultiIndex axes(int a, int b) {
    MultiIndex m;
    m.counts[a] += 1;
    m.counts[b] += 1;
    return m;
  }
  int order() const { return counts[0] + counts[1] + counts[2]; }
  std::string to_string() const;
  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

enum class KernelFamily { rational, stretched_exp };

// Built-in isotropic kernels, written as g(x) = phi(|x|^2):
//   rational:       phi(s) = (1 + s)^(-beta/2)
//   stretched_exp:  phi(s) = exp(1 - (1 + s)^(gamma/2))   (g(0) = 1, decaying)
class Kernel {
 public:
  static Kernel rational(int dimension, double beta);
  static Kernel stretched_exp(int dimension, double gamma);

  KernelFamily family() const { return family_; }
  int dimension() const { return dimension_; }
  double parameter() const { return parameter_; }
  static constexpr int derivative_order_max() { return 2; }

  // phi and its first two derivatives in s = |x|^2.
  double profile(double s, int derivative) const;
  double eval(const MultiIndex& alpha, std::span<const double> x) const;
  // Radial envelope E(rho) >= |d^alpha g(x)| for every |x| = rho and |alpha| = order.
  double envelope(int order, double rho) const;

  std::string to_string() const;

 private:
  Kernel(KernelFamily f, int d, double p) : family_(f), dimension_(d), parameter_(p) {}
  KernelFamily family_;
  int dimension_;
  double parameter_;
};

// Radial cutoff chi: 1 on B(1/4), 0 outside B(1/2), quintic smoothstep in between (C^2).
struct CutoffFunction {
  static constexpr double inner_radius = 0.25;
  static constexpr double outer_radius = 0.5;
  // Profile psi(rho) and its first two derivatives in rho = |x|.
  static double profile(double rho, int derivative);
};

// g^r(x) = g(x) chi(x / r); vanishes for |x| >= r/2.
class TruncatedKernel {
 public:
  TruncatedKernel(Kernel base, double range);
  const Kernel& base() const { return base_; }
  double range() const { return range_; }
  int dimension() const { return base_.dimension(); }
  double support_radius() const { return CutoffFunction::outer_radius * range_; }
  // g^r is still radial: Phi(s) = phi(s) psi(sqrt(s) / r).
  double profile(double s, int derivative) const;
  double eval(const MultiIndex& alpha, std::span<const double> x) const;
  double envelope(int order, double rho) const;
  std::string to_string() const;

 private:
  Kernel base_;
  double range_;
};

using AnyKernel = std::variant<Kernel, TruncatedKernel>;

int kernel_dimension(const AnyKernel& k);
// Infinity for untruncated kernels.
double support_radius(const AnyKernel& k);
std::string kernel_label(const AnyKernel& k);

double eval_kernel(const AnyKernel& k, const MultiIndex& alpha, std::span<const double> x);
double kernel_profile(const AnyKernel& k, double s, int derivative);
double kernel_envelope(const AnyKernel& k, int order, double rho);

// Polynomial decay exponent used for the |d^alpha g| (1 + |x|)^beta bound:
// beta for the rational family, d + 1 for the (faster decaying) stretched exponential.
double decay_exponent(const AnyKernel& k);
// sup over x and |alpha| = order of |d^alpha g(x)| (1 + |x|)^beta, from a radial scan.
double decay_constant(const AnyKernel& k, int order);

// Sphere surface area |S^{d-1}|.
double sphere_area(int dimension);

struct KernelIntegrals {
  double integral;          // int g
  double integral_squared;  // int g^2 = K(0)
};

// Both integrals over R^d by adaptive radial quadrature, relative error < 1e-8.
KernelIntegrals kernel_integral(const AnyKernel& k);

// int |d^alpha g|^2 over R^d (variance of the derivative field).
double derivative_energy(const AnyKernel& k, const MultiIndex& alpha);

// Upper bound on (int_{|y| > radius} |d^alpha g|^2)^{1/2} from the radial envelope.
double l2_tail_bound(const AnyKernel& k, int order, double radius);

// Smallest radius (to 1e-3 relative) at which l2_tail_bound drops below tol.
double radius_for_l2_tail(const AnyKernel& k, int order, double tol);

// sqrt(K(0) / |K''(0)|), with K''(0) the second derivative along one axis.
double correlation_length(const AnyKernel& k);

struct CovarianceGrid {
  double spacing = 0.25;
  double half_width = 64.0;
};

// Covariance K(x) = int g(-y) g(x - y) dy, by 2-D (or 1-D) quadrature and by FFT
// autocorrelation of the sampled kernel on a lattice. Returns the quadrature value;
// throws NumericalConsistencyError when the two differ by more than `tolerance`.
double covariance(const AnyKernel& k, std::span<const double> lag, const CovarianceGrid& grid = {},
                  double tolerance = 1e-5);

// The two routes separately, for diagnostics and tests.
double covariance_quadrature(const AnyKernel& k, std::span<const double> lag);

class FftCovariance {
 public:
  FftCovariance(const AnyKernel& k, const CovarianceGrid& grid);
  // Evaluates at an arbitrary lag; lattice lags reuse one cached autocorrelation.
  double operator()(std::span<const double> lag) const;

 private:
  std::vector<double> sample(std::span<const double> shift) const;
  double correlate(const std::vector<double>& shifted, std::span<const long> lattice_lag) const;
  AnyKernel kernel_;
  CovarianceGrid grid_;
  int dimension_;
  long half_points_;          // samples at n * spacing for |n_i| <= half_points_
  std::size_t fft_side_;
  std::vector<double> unshifted_;
  std::vector<double> on_lattice_;  // h^d (a * a)[k], circular layout of side fft_side_
};

}  // namespace shotperc
