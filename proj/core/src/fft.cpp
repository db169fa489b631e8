#include "shotperc/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <functional>
#include <mutex>
#include <numeric>

#include "shotperc/errors.hpp"

namespace shotperc {

namespace {

// FFTW's planner is not thread safe; execution with new arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct RealBuffer {
  explicit RealBuffer(std::size_t n) : ptr(fftw_alloc_real(n)) {
    if (!ptr) throw std::bad_alloc();
  }
  ~RealBuffer() { fftw_free(ptr); }
  RealBuffer(const RealBuffer&) = delete;
  RealBuffer& operator=(const RealBuffer&) = delete;
  double* ptr;
};

struct ComplexBuffer {
  explicit ComplexBuffer(std::size_t n) : ptr(fftw_alloc_complex(n)) {
    if (!ptr) throw std::bad_alloc();
  }
  ~ComplexBuffer() { fftw_free(ptr); }
  ComplexBuffer(const ComplexBuffer&) = delete;
  ComplexBuffer& operator=(const ComplexBuffer&) = delete;
  fftw_complex* ptr;
};

}  // namespace

std::size_t next_fast_size(std::size_t n) {
  if (n <= 1) return 1;
  for (std::size_t m = n;; ++m) {
    std::size_t r = m;
    for (std::size_t p : {2u, 3u, 5u, 7u}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return m;
  }
}

struct CirculantConvolver::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

CirculantConvolver::CirculantConvolver(std::vector<std::size_t> dims,
                                       std::span<const double> kernel_circular)
    : dims_(std::move(dims)) {
  if (dims_.empty() || dims_.size() > 3) throw InvalidArgument("convolver: rank must be 1..3");
  size_ = std::accumulate(dims_.begin(), dims_.end(), std::size_t{1}, std::multiplies<>());
  if (size_ == 0) throw InvalidArgument("convolver: empty lattice");
  if (kernel_circular.size() != size_) throw InvalidArgument("convolver: kernel size mismatch");
  spectrum_size_ = size_ / dims_.back() * (dims_.back() / 2 + 1);

  std::vector<int> n(dims_.begin(), dims_.end());
  RealBuffer real(size_);
  ComplexBuffer cplx(spectrum_size_);
  plans_ = std::make_unique<Plans>();
  {
    std::lock_guard lock(planner_mutex());
    plans_->forward = fftw_plan_dft_r2c(static_cast<int>(n.size()), n.data(), real.ptr, cplx.ptr,
                                        FFTW_ESTIMATE);
    plans_->backward = fftw_plan_dft_c2r(static_cast<int>(n.size()), n.data(), cplx.ptr, real.ptr,
                                         FFTW_ESTIMATE);
  }
  if (!plans_->forward || !plans_->backward) throw std::runtime_error("convolver: FFTW planning failed");

  std::memcpy(real.ptr, kernel_circular.data(), size_ * sizeof(double));
  fftw_execute_dft_r2c(plans_->forward, real.ptr, cplx.ptr);
  spectrum_.resize(spectrum_size_);
  const double scale = 1.0 / static_cast<double>(size_);
  for (std::size_t i = 0; i < spectrum_size_; ++i) {
    spectrum_[i] = std::complex<double>(cplx.ptr[i][0], cplx.ptr[i][1]) * scale;
  }
}

CirculantConvolver::~CirculantConvolver() = default;

void CirculantConvolver::apply(std::span<double> data) const {
  if (data.size() != size_) throw InvalidArgument("convolver: data size mismatch");
  RealBuffer real(size_);
  ComplexBuffer cplx(spectrum_size_);
  std::memcpy(real.ptr, data.data(), size_ * sizeof(double));
  fftw_execute_dft_r2c(plans_->forward, real.ptr, cplx.ptr);
  for (std::size_t i = 0; i < spectrum_size_; ++i) {
    const std::complex<double> v(cplx.ptr[i][0], cplx.ptr[i][1]);
    const std::complex<double> w = v * spectrum_[i];
    cplx.ptr[i][0] = w.real();
    cplx.ptr[i][1] = w.imag();
  }
  fftw_execute_dft_c2r(plans_->backward, cplx.ptr, real.ptr);
  std::memcpy(data.data(), real.ptr, size_ * sizeof(double));
}

}  // namespace shotperc
