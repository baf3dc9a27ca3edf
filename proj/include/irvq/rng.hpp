#pragma once

#include <cstdint>
#include <random>

namespace irvq {

// Every randomized routine in this library draws from std::mt19937_64 through
// the helpers below. mt19937_64 has a fully specified output sequence, and the
// helpers avoid std::uniform_int_distribution / std::discrete_distribution,
// whose mappings differ between standard libraries. Same seed, same results,
// everywhere.

// Unbiased draw in [0, n). Lemire's multiply-shift with rejection.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  unsigned __int128 m = static_cast<unsigned __int128>(rng()) * n;
  auto lo = static_cast<std::uint64_t>(m);
  if (lo < n) {
    const std::uint64_t threshold = -n % n;
    while (lo < threshold) {
      m = static_cast<unsigned __int128>(rng()) * n;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

// Uniform double in [0, 1) with 53 random mantissa bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace irvq
