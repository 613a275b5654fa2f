#pragma once

// Named, counter-derived random streams. Every random draw in the toolkit
// descends from one global seed through derive_seed(), so a (seed, stream,
// index) triple always names the same stream.

#include <cstdint>
#include <random>
#include <string_view>

namespace orbitcal {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view stream,
                                 std::uint64_t index = 0) {
  return splitmix64(splitmix64(parent ^ fnv1a(stream)) + index);
}

inline Rng make_rng(std::uint64_t parent, std::string_view stream, std::uint64_t index = 0) {
  return Rng(derive_seed(parent, stream, index));
}

}  // namespace orbitcal
