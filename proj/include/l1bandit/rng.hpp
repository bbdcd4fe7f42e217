#pragma once

// Deterministic random number plumbing.
//
// All stochastic components of the lab draw from std::mt19937_64 engines
// seeded through the helpers below.  Distribution transforms are hand-rolled
// stateless functions (not std:: distribution objects) so that a given seed
// produces the same byte stream regardless of standard-library internals.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace l1bandit {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; good avalanche, used for seed derivation.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a hash of a string, for mixing textual identifiers into seeds.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Folds one more word into a seed chain.
inline std::uint64_t seed_combine(std::uint64_t h, std::uint64_t w) {
  return splitmix64(h ^ (w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

/// Derives an independent stream seed from (master, textual id, indices).
/// Used as hash(master_seed, policy_id, rep_index) plus a salt that keeps
/// environment, policy and model streams apart.
inline std::uint64_t derive_seed(std::uint64_t master, const std::string& id,
                                 std::uint64_t index, std::uint64_t salt) {
  std::uint64_t h = splitmix64(master);
  h = seed_combine(h, fnv1a(id));
  h = seed_combine(h, index);
  h = seed_combine(h, salt);
  return h;
}

// Salts for the distinct stream families of one experiment.
namespace stream {
constexpr std::uint64_t kModel = 0xA1u;
constexpr std::uint64_t kEnvironment = 0xB2u;
constexpr std::uint64_t kPolicy = 0xC3u;
constexpr std::uint64_t kPermutation = 0xD4u;
constexpr std::uint64_t kDiagnostics = 0xE5u;
}  // namespace stream

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in (0, 1); rejects exact zeros so log() stays finite.
inline double uniform_open01(Rng& rng) {
  double u = uniform01(rng);
  while (u == 0.0) u = uniform01(rng);
  return u;
}

/// Unbiased uniform integer in [0, n); n must be positive.
inline int uniform_int(Rng& rng, int n) {
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return static_cast<int>(x % un);
}

/// Standard normal via Box-Muller (one value per call; the second of each
/// pair is discarded to keep the helper stateless).
inline double normal(Rng& rng) {
  const double u1 = uniform_open01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

/// In-place Fisher-Yates shuffle driven by uniform_int above.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
    const int j = uniform_int(rng, i + 1);
    std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
  }
}

}  // namespace l1bandit
