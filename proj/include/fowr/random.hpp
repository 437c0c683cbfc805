#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <string_view>
#include <vector>

namespace fowr {

using rng_t = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Deterministic sub-stream seed for stream `index` of a master seed.
/// Trials, subjects and sessions each get their own stream so results do not
/// depend on execution order.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return detail::splitmix64(detail::splitmix64(seed) ^ detail::splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline rng_t substream(std::uint64_t seed, std::uint64_t index) {
  return rng_t{substream_seed(seed, index)};
}

// FNV-1a, used for config digests and string-keyed sub-streams.
inline std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Uniform integer in [0, n). Implemented directly on the engine output so
/// the draw sequence is identical across standard library implementations.
inline std::size_t uniform_index(rng_t& rng, std::size_t n) {
  const std::uint64_t bound = n;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

inline double uniform_unit(rng_t& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// k distinct indices from [0, n), in draw order (partial Fisher-Yates).
inline std::vector<std::size_t> draw_without_replacement(rng_t& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + uniform_index(rng, n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

inline std::vector<std::size_t> random_permutation(rng_t& rng, std::size_t n) {
  return draw_without_replacement(rng, n, n);
}

}  // namespace fowr
