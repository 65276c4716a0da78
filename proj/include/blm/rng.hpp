#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace blm {

using Rng = std::mt19937_64;

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Named random streams hanging off one seed. Every random draw in the
/// library goes through one of these tags so a single 64-bit seed pins the
/// whole pipeline.
enum class Stream : std::uint64_t {
  Beta = 1,
  Design = 2,
  LabelNoise = 3,
  TestDesign = 4,
  TestNoise = 5,
  Population = 6,
  Checks = 7,
  Directions = 8,
};

inline std::string_view stream_name(Stream s) {
  switch (s) {
    case Stream::Beta: return "beta";
    case Stream::Design: return "design";
    case Stream::LabelNoise: return "label_noise";
    case Stream::TestDesign: return "test_design";
    case Stream::TestNoise: return "test_noise";
    case Stream::Population: return "population";
    case Stream::Checks: return "checks";
    case Stream::Directions: return "directions";
  }
  return "unknown";
}

inline std::uint64_t derive_seed(std::uint64_t seed, Stream tag) {
  return mix64(mix64(seed) ^ (static_cast<std::uint64_t>(tag) * 0xd1b54a32d192ed03ULL));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

}  // namespace blm
