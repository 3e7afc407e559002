#pragma once

#include <cstdint>
#include <random>

namespace banditware {

/// The engine every seeded component draws from.
using Rng = std::mt19937_64;

/// splitmix64 finaliser; spreads consecutive integers over the full range.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of an independent stream: base ^ hash(index).
constexpr std::uint64_t stream_seed(std::uint64_t base, std::uint64_t index) noexcept {
  return base ^ mix64(index);
}

inline Rng make_stream(std::uint64_t base, std::uint64_t index) {
  return Rng(stream_seed(base, index));
}

}  // namespace banditware
