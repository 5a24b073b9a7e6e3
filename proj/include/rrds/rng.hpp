#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace rrds {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based split: the seed of substream `index` under `parent`.
/// A pure function of its arguments, so serial and parallel runs agree.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return mix64(mix64(parent) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Fixed stream tags for the pipeline stages of one replication.
enum class Stream : std::uint64_t {
  population = 1,
  edges = 2,
  seeds = 3,
  recruit_rds = 4,
  recruit_rrds = 5,
  bootstrap_rds = 6,
  bootstrap_rrds = 7,
};

constexpr std::uint64_t derive_seed(std::uint64_t parent, Stream stream) {
  return derive_seed(parent, static_cast<std::uint64_t>(stream));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// Uniform index in [0, n). n must be positive.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

/// Uniform real in [0, 1) built from the top 53 bits; never returns 1.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// True with probability p. p <= 0 and p >= 1 consume no randomness.
inline bool bernoulli(Rng& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform01(rng) < p;
}

}  // namespace rrds
