#pragma once

#include <cstdint>
#include <random>

namespace bsa {

// splitmix64 finalizer; used to turn (seed, stream id) into engine seeds.
inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Every randomized stage of a run draws from its own stream so results do
// not depend on evaluation or thread order. Stream ids are fixed constants.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(mix64(mix64(seed) ^ mix64(stream)));
}

namespace stream {
inline constexpr std::uint64_t truth = 11;
inline constexpr std::uint64_t schedule = 12;
inline constexpr std::uint64_t noise = 13;
inline constexpr std::uint64_t init = 20;
inline constexpr std::uint64_t estimate_k = 50;
inline constexpr std::uint64_t chain_base = 100;  // chain c uses chain_base + c
inline constexpr std::uint64_t predictive = 900;
}  // namespace stream

}  // namespace bsa
