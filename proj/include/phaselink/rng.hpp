#pragma once

#include <cstdint>

#include "phaselink/types.hpp"

namespace phaselink {

// splitmix64, used for seeding and for hashing work-item coordinates into
// independent subseeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derive a stream seed from a base seed and up to two counters. Used so that
/// parallel work items (ensembles, pixels) get reproducible independent
/// streams regardless of scheduling.
inline std::uint64_t subseed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t s = seed;
  std::uint64_t h = splitmix64(s);
  s ^= a + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h = splitmix64(s);
  s ^= b + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return splitmix64(s);
}

/// xoshiro256++ generator. Deterministic across platforms, unlike the
/// distributions in <random>, which are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = splitmix64(s);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1].
  double uniform01_open_low() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform angle in (-pi, pi].
  double uniform_angle() { return kPi - 2.0 * kPi * uniform01(); }

  /// Standard circular complex normal CN(0,1): modulus^2 ~ Exp(1), phase
  /// uniform, so E|z|^2 = 1 and Re/Im are N(0, 1/2).
  cdouble complex_normal() {
    const double r = std::sqrt(-std::log(uniform01_open_low()));
    return std::polar(r, 2.0 * kPi * uniform01());
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

}  // namespace phaselink
