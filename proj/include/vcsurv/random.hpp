#pragma once

#include <cstdint>
#include <random>

namespace vcsurv {

using Rng = std::mt19937_64;

/// Deterministic substream seed for (seed, stream, index); a splitmix64 chain,
/// so replicate b of stream s never depends on how many others ran before it.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                                  std::uint64_t index) noexcept {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ stream) ^ index);
}

[[nodiscard]] inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0,
                                  std::uint64_t index = 0) {
  return Rng(derive_seed(seed, stream, index));
}

// Stream tags used across modules.
namespace streams {
inline constexpr std::uint64_t dataset = 1;
inline constexpr std::uint64_t multipliers = 2;
inline constexpr std::uint64_t split = 3;
inline constexpr std::uint64_t calibration = 4;
}  // namespace streams

}  // namespace vcsurv
