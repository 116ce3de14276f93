#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace chainsync {

/// Seedable random stream with portable inverse-CDF samplers. The standard
/// distribution objects are implementation-defined, so sampling goes through
/// explicit transforms of mt19937_64 output; identical (seed, stream) pairs
/// produce identical draws on every platform.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32), stream};
    engine_.seed(seq);
  }

  /// Uniform draw in [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Exponential inter-arrival time with the given rate.
  double exponential(double rate) {
    return -std::log1p(-uniform01()) / rate;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Number of transmission attempts until first success; support {1,2,...},
  /// P[attempts = k] = p_error^(k-1) * (1 - p_error).
  long geometric_attempts(double p_error) {
    if (p_error <= 0.0) return 1;
    const double u = uniform01();
    return 1 + static_cast<long>(std::floor(std::log1p(-u) / std::log(p_error)));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace chainsync
