#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace shotperc {

// Smallest n' >= n whose prime factors are all in {2, 3, 5, 7}.
std::size_t next_fast_size(std::size_t n);

// Circular convolution with a fixed kernel on a periodic lattice of shape `dims`
// (row-major, last axis fastest). The kernel spectrum is computed once; apply()
// is safe to call concurrently from several threads.
class CirculantConvolver {
 public:
  CirculantConvolver(std::vector<std::size_t> dims, std::span<const double> kernel_circular);
  ~CirculantConvolver();
  CirculantConvolver(const CirculantConvolver&) = delete;
  CirculantConvolver& operator=(const CirculantConvolver&) = delete;

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t size() const { return size_; }

  // data <- kernel (*) data, circularly. data.size() must equal size().
  void apply(std::span<double> data) const;

 private:
  struct Plans;
  std::vector<std::size_t> dims_;
  std::size_t size_;
  std::size_t spectrum_size_;
  std::vector<std::complex<double>> spectrum_;  // already scaled by 1/size
  std::unique_ptr<Plans> plans_;
};

}  // namespace shotperc
