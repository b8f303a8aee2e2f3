#pragma once

#include <cstdint>
#include <random>

#include "qgf/types.hpp"

namespace qgf {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent sub-streams from a root seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr Seed derive_seed(Seed root, std::uint64_t stream) noexcept {
  return mix_seed(mix_seed(root) ^ mix_seed(stream + 0x632BE59BD9B4E019ULL));
}

inline Rng make_rng(Seed root, std::uint64_t stream) { return Rng{derive_seed(root, stream)}; }

}  // namespace qgf
