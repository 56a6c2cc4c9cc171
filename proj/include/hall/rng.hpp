#pragma once

#include <cstdint>
#include <random>

namespace hall {

// SplitMix64: statistically solid 64->64 mixer; used both as a stream seeder
// and as the counter-based per-trial seed splitter. Trial streams must depend
// only on (master_seed, trial_index) so ensemble results are independent of
// worker scheduling.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial_index) {
  return splitmix64(splitmix64(master_seed) ^ splitmix64(trial_index + 1));
}

inline std::mt19937_64 trial_rng(std::uint64_t master_seed, std::uint64_t trial_index) {
  return std::mt19937_64(trial_seed(master_seed, trial_index));
}

// Uniform double in [0,1) built from the top 53 bits of one engine draw.
// Used instead of std::uniform_real_distribution so that sampled ensembles
// are reproducible independent of the standard-library implementation.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace hall
