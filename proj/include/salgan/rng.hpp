#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace salgan {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent random stream keyed by a master seed and a path of indices.
/// Equal keys always give the same stream, so work split across threads
/// consumes exactly the randomness it would consume serially.
inline Rng substream(std::uint64_t master, std::span<const std::uint64_t> keys) {
  std::uint64_t h = splitmix64(master);
  for (auto k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return Rng(h);
}

inline Rng substream(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
  return substream(master, std::span<const std::uint64_t>(keys.begin(), keys.size()));
}

/// `keys` followed by `extra`.
inline std::vector<std::uint64_t> extend_keys(std::span<const std::uint64_t> keys,
                                              std::initializer_list<std::uint64_t> extra) {
  std::vector<std::uint64_t> out(keys.begin(), keys.end());
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace salgan
