/**
 * @file rng.hpp
 * @brief Seedable, portable 64-bit RNG with per-stream splitting.
 *
 * SplitMix64 with hand-rolled uniform and Box-Muller normal draws, so the same
 * seed yields bit-identical streams on every platform and standard library.
 * Streams are derived as derive(seed, stream_id): adding streams never
 * perturbs existing ones.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace voyopt {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller; one draw per call, pair cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// FNV-1a hash of a stream label, for mixing into derived seeds.
inline std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

/// Independent stream seeded from (root seed, label). Same inputs, same stream.
inline Rng derive_rng(std::uint64_t seed, std::string_view label) {
  return Rng(seed ^ hash_label(label));
}

/// Numbered stream variant, e.g. one per voyage.
inline Rng derive_rng(std::uint64_t seed, std::string_view label, std::uint64_t index) {
  return Rng(seed ^ hash_label(label) ^ (0x9E3779B97F4A7C15ull * (index + 1)));
}

}  // namespace voyopt
