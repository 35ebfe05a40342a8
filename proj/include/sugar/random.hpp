#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace sugar {

/// splitmix64 finalizer. Seeds for every component and call site are derived
/// from one root seed through this mix.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t salt) noexcept {
  return mix_seed(parent ^ mix_seed(salt));
}

/// Uniform integer in [0, bound). std::uniform_int_distribution is
/// implementation-defined, which would break cross-platform determinism.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % bound;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % bound;
}

template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    using std::swap;
    swap(v[i - 1], v[bounded(rng, i)]);
  }
}

}  // namespace sugar
