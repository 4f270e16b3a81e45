#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mrtrack {

// Named RNG streams: every concern (truth noise, per-agent sensing noise,
// per-agent PSO) draws from its own generator derived from the trial seed by
// a stable label, so execution order and parallelism cannot perturb results.

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : s) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 1099511628211ull;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::mt19937_64 derive_stream(std::uint64_t seed, std::string_view label) {
  return std::mt19937_64(splitmix64(seed ^ fnv1a64(label)));
}

}  // namespace mrtrack
