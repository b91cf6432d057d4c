#pragma once

#include <cstdint>
#include <random>

namespace sgdlim {

/// splitmix64 mix; raw small seeds leave mt19937_64 poorly mixed for the
/// first draws, so every engine is seeded through this.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::mt19937_64 seeded_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(seed)),
                    static_cast<std::uint32_t>(splitmix64(seed) >> 32),
                    static_cast<std::uint32_t>(splitmix64(seed + 1)),
                    static_cast<std::uint32_t>(splitmix64(seed + 1) >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace sgdlim
