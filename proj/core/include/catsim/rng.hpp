#pragma once

#include <cstdint>

namespace catsim::rng {

// Counter-based randomness: every draw is a pure hash of (seed, key words),
// never of generator state. Results are therefore independent of vehicle
// iteration order and of how the network is split across domains.

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t hash3(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                           std::uint64_t c) {
  std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc908ull);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  return mix64(h ^ c);
}

/// Uniform draw in [0, 1) keyed by (seed, a, b, c).
inline double uniform01(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                        std::uint64_t c) {
  return static_cast<double>(hash3(seed, a, b, c) >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n) keyed by (seed, a, b, c); n > 0.
inline std::uint64_t below(std::uint64_t n, std::uint64_t seed, std::uint64_t a,
                           std::uint64_t b, std::uint64_t c) {
  return hash3(seed, a, b, c) % n;
}

} // namespace catsim::rng
