// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstdint>

namespace avse {

/// Deterministic counter-based generator built on the splitmix64 mix
/// function. The same seed produces the same stream on every platform, and
/// split() derives decorrelated child streams, so data generation can run in
/// parallel without changing output.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Standard normal via Box-Muller; consumes exactly two draws per call.
  double normal() {
    double u1 = 1.0 - next_double();  // (0, 1]
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Integer in [0, n), n > 0. Modulo bias is negligible for n << 2^64.
  uint64_t next_below(uint64_t n) { return next_u64() % n; }

  /// Derives an independent stream keyed by `stream`; does not advance this
  /// generator.
  Rng split(uint64_t stream) const {
    return Rng(mix(state_ ^ mix(stream + 0x9e3779b97f4a7c15ULL)));
  }

 private:
  uint64_t state_;
};

}  // namespace avse
