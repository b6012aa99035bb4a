#pragma once

#include <cstdint>

namespace qgalv {

/// Seed of stream i derived from a master seed: splitmix64(master + (i + 1) * 0x9E3779B97F4A7C15).
/// Streams depend only on (master, i), never on thread scheduling.
[[nodiscard]] inline std::uint64_t member_seed(std::uint64_t master, std::uint64_t i) {
  std::uint64_t z = master + (i + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace qgalv
