#pragma once

#include <cstdint>

namespace dragon {

// Counter-based uniforms: every draw is a pure function of (seed, stream, index),
// so a run can be replayed step by step in another process or language.

constexpr std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t HashCombine(std::uint64_t a, std::uint64_t b) { return SplitMix64(a ^ SplitMix64(b)); }

/// Uniform in [0, 1) with 53 random bits.
constexpr double UniformAt(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t h = HashCombine(HashCombine(seed, stream), index);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

namespace streams {
inline constexpr std::uint64_t kDraft = 0x6472616674ULL;        // per-step draft draws
inline constexpr std::uint64_t kAggregation = 0x61676772ULL;    // aggregation accept/resample/select draws
inline constexpr std::uint64_t kFallbackModel = 0x66616c6cULL;  // toy decoder fallback rows
inline constexpr std::uint64_t kStrategy = 0x7374726174ULL;     // simulator random strategy
inline constexpr std::uint64_t kTrace = 0x7472616365ULL;        // synthetic acceptance traces
}  // namespace streams

}  // namespace dragon
