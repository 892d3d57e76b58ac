#pragma once

#include <cstdint>

namespace dcnb::detail {

// splitmix64 finalizer. Used both as the generator step and as the hash for
// deterministic multipath selection.
inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
  return mix64(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
}

// Deterministic generator with a fixed cross-platform byte stream. The std
// engines are portable but the std distributions are not; draws here are
// implemented explicitly so seeded outputs are identical everywhere.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound) via multiply-shift; bias is below bound/2^64.
  uint64_t next_below(uint64_t bound) {
    return static_cast<uint64_t>(
        (static_cast<__uint128_t>(next()) * bound) >> 64);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return next_unit() < p; }

  // Sum of `trials` fair coin flips; small-trial discrete bell curve.
  uint32_t binomial(uint32_t trials) {
    uint32_t hits = 0;
    for (uint32_t i = 0; i < trials; ++i) hits += next() >> 63;
    return hits;
  }

 private:
  uint64_t state_;
};

}  // namespace dcnb::detail
