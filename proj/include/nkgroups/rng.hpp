#pragma once

// Seed derivation and portable draws.
//
// Every stochastic component of a run owns its own std::mt19937_64 stream,
// seeded from derive_seed(base, replication, purpose, index). The mixing
// function is splitmix64 folded over the four words, so adding a new purpose
// never perturbs the streams of existing ones.
//
// The std:: distributions are implementation-defined, so uniform doubles and
// bounded integers are produced here from raw engine output. Results are
// therefore identical across standard libraries.

#include <cstdint>
#include <random>

namespace nkgroups {

using Rng = std::mt19937_64;

enum class StreamPurpose : std::uint64_t {
  Matrix = 1,
  Landscape = 2,
  Population = 3,
  Agent = 4,
  Prior = 5,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// h(base_seed, replication, purpose, index). `index` is the agent id for
/// agent streams and 0 otherwise.
constexpr std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t replication,
                                    StreamPurpose purpose, std::uint64_t index = 0) noexcept {
  std::uint64_t h = splitmix64(base_seed);
  h = splitmix64(h ^ replication);
  h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  h = splitmix64(h ^ index);
  return h;
}

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

/// Uniform on [0, 1) with 53 bits of resolution.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer on [0, bound). Rejection sampling keeps it unbiased.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = (~std::uint64_t{0} / bound) * bound;  // largest multiple of bound
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % bound;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

}  // namespace nkgroups
