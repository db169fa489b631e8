#pragma once

#include <cstdint>
#include <limits>

namespace shotperc {

// Purpose tags keep streams for different jobs of the same (replica, cell) apart.
enum class StreamPurpose : std::uint64_t {
  points = 1,
  white_noise = 2,
  coupling = 3,
  fill_in = 4,
  mask = 5,
  auxiliary = 6,
};

// Counter-based stream: output k is a bijective mix of (key + k * golden gamma),
// the SplitMix64 construction. The key is a hash of (seed, replica, cell, purpose),
// so every stream can be regenerated independently of execution order.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t replica, std::uint64_t cell = 0,
            StreamPurpose purpose = StreamPurpose::auxiliary);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  // Standard normal (Marsaglia polar method; the spare value is cached).
  double normal();
  // Poisson(mean): inversion below mean 30, PTRS transformed rejection above.
  std::uint64_t poisson(double mean);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

// Stateless 64-bit mixer (SplitMix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

// log(k!) without touching global state (std::lgamma may write signgam).
double log_factorial(std::uint64_t k);

}  // namespace shotperc
