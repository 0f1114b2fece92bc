#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace proxauth {

// Deterministic PRNG used everywhere randomness is needed. The standard
// <random> distributions are implementation-defined, which would break the
// byte-identical replay contract, so uniform and Gaussian draws are generated
// from raw 64-bit output instead.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform double in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1]; safe as a log() argument.
  double next_unit_positive() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  /// Standard normal via Box-Muller; consumes exactly two raw draws.
  double next_gaussian() {
    constexpr double two_pi = 6.283185307179586476925286766559;
    const double u1 = next_unit_positive();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

 private:
  std::uint64_t state_;
};

/// Derives an independent stream from a base seed and a textual label.
/// Streams with distinct labels never share draws, so one device's noise is a
/// pure function of (seed, label) no matter what other devices do.
inline RandomStream derive_stream(std::uint64_t seed, std::string_view label) {
  std::uint64_t s = seed;
  std::uint64_t scrambled = splitmix64(s);
  return RandomStream(scrambled ^ fnv1a64(label));
}

}  // namespace proxauth
