#pragma once

#include <cstdint>
#include <random>

namespace frdpca {

/// SplitMix64 finaliser.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed of the stream identified by (master, index). Streams for distinct indices do not depend on
/// the order in which they are generated.
constexpr std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master) ^ (index * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull));
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t master, std::uint64_t index) {
  return Engine(mix_seed(master, index));
}

}  // namespace frdpca
