#pragma once

#include <cstdint>
#include <random>

namespace crisk {

/// Generator type used throughout. Streams are derived per (seed, index) so
/// Monte Carlo results do not depend on scheduling or thread count.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer; bijective on 64-bit words.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Independent generator for stream `stream` of a master `seed`.
[[nodiscard]] Rng make_stream(std::uint64_t seed, std::uint64_t stream);

}  // namespace crisk
