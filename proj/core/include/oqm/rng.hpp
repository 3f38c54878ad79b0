#pragma once

#include <cstdint>
#include <random>

namespace oqm {

using Rng = std::mt19937_64;

// Splitmix64-style stream derivation. Indexed loops draw independent streams
// from (seed, index) so results do not depend on evaluation order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(seed, a), b);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace oqm
