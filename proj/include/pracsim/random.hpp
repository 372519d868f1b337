#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace pracsim {

// std::mt19937_64 has a standardized output sequence; the std distributions do
// not. Everything derived from the engine goes through the helpers below so
// generated traces are identical across standard libraries.
using Rng = std::mt19937_64;

/// Uniform integer in [0, bound). Rejection sampling, no modulo bias.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t x = rng();
    if (x >= threshold) return x % bound;
  }
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Deterministic Fisher-Yates permutation of [0, n).
inline std::vector<std::uint32_t> shuffled_indices(std::uint32_t n, Rng& rng) {
  std::vector<std::uint32_t> out(n);
  std::iota(out.begin(), out.end(), 0u);
  for (std::uint32_t i = n; i > 1; --i) {
    const auto j = static_cast<std::uint32_t>(uniform_below(rng, i));
    std::swap(out[i - 1], out[j]);
  }
  return out;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace pracsim
