#pragma once

#include <cstdint>

namespace ntkcv {

// splitmix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for child stream `index` of `parent`. Depends only on the pair, so
/// runs can execute in any order or concurrently.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return splitmix64(splitmix64(parent) ^ (index * 0xD1B54A32D192ED03ULL + 0x632BE59BD9B4E019ULL));
}

// Named sub-streams of a run seed.
enum class SeedStream : std::uint64_t {
  subset = 1,
  init = 2,
  train = 3,
  select = 4,
  size = 5,
};

constexpr std::uint64_t derive_seed(std::uint64_t parent, SeedStream stream) {
  return derive_seed(parent, static_cast<std::uint64_t>(stream) + 0x5EED0000ULL);
}

}  // namespace ntkcv
