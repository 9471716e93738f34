#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "shepherd/vec.hpp"

namespace shepherd {

// Seeded random stream. Same seed (and stream id) gives the same sample
// sequence; distribution transforms are implemented here rather than via
// std::*_distribution so the draw sequence is pinned by this header alone.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{seed, stream};
    gen_.seed(seq);
  }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    // modulo bias is negligible for n << 2^64
    return gen_() % n;
  }

  /// Independent standard normal pair (Box-Muller).
  Vec2 normal2() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

  /// Single standard normal draw (consumes two uniforms).
  double normal() { return normal2().x; }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace shepherd
