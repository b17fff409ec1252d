#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

// Counter-based keyed random streams. Every draw is a pure function of its
// key, so sampling is independent of evaluation order and thread schedule.
namespace scmdyn::rng {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

inline std::uint64_t mix(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

struct Key {
  std::uint64_t state = 0;

  [[nodiscard]] Key with(std::uint64_t v) const { return {mix(state ^ mix(v))}; }
};

inline Key key(std::uint64_t seed) { return Key{mix(seed)}; }

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Uniform in [0, 1), 53-bit resolution.
inline double uniform01(Key k) {
  return static_cast<double>(mix(k.state) >> 11) * 0x1.0p-53;
}

// Uniform in (0, 1]; safe as a log() argument.
inline double uniform01_open(Key k) {
  return static_cast<double>((mix(k.state) >> 11) + 1) * 0x1.0p-53;
}

// Standard normal via Box-Muller on two sub-draws of the key.
inline double gaussian(Key k) {
  const double u1 = uniform01_open(k.with(0x67617573ull));
  const double u2 = uniform01(k.with(0x6e6f726dull));
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace scmdyn::rng
