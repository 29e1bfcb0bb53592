#ifndef COTRACK_RNG_HPP_
#define COTRACK_RNG_HPP_

#include <cmath>
#include <cstdint>

namespace cotrack {

// splitmix64; bit-stable across platforms, unlike the std distributions.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t seed, uint64_t v) {
  return mix64(seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

// Sequential generator for sampling loops (RANSAC, scenario scripts).
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(mix64(seed)) {}

  uint64_t next_u64() {
    state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
    return mix64(state_);
  }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n); n >= 1.
  uint64_t next_below(uint64_t n) {
    const uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
    for (;;) {
      const uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Standard normal via Box-Muller.
  double next_gaussian() {
    double u1 = next_double();
    const double u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  uint64_t state_;
};

// Counter-based helpers for per-pixel noise: order-independent, so frame
// rendering stays deterministic under any parallel schedule.
inline double hash_uniform(uint64_t seed, uint64_t a, uint64_t b) {
  const uint64_t h = mix64(hash_combine(seed, a) ^ (b * 0xd6e8feb86659fd93ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline double hash_gaussian(uint64_t seed, uint64_t a, uint64_t b) {
  double u1 = hash_uniform(seed, a, b * 2 + 0);
  const double u2 = hash_uniform(seed, a, b * 2 + 1);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace cotrack

#endif  // COTRACK_RNG_HPP_
