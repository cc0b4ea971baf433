#pragma once

#include <cstdint>
#include <random>

namespace qasp {

/// SplitMix64 mixing step.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream for shot `index` of run `seed`: the generator state
/// depends only on (seed, index), so shots can run in parallel and in any
/// order while staying reproducible.
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t index = 0) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x51f15e11ULL)));
}

}  // namespace qasp
