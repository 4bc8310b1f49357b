#pragma once

#include <cstdint>
#include <random>

namespace locem {

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Derives a decorrelated stream seed from one master seed. All randomness in
/// the library flows from a single 64-bit seed through this function, so
/// execution order (e.g. in the work pool) never affects results.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index = 0) {
  return mix64(master ^ mix64(stream) ^ mix64(mix64(index) + 0x632be59bd9b4e019ull));
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

}  // namespace locem
