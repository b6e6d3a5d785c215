#pragma once

#include <cstdint>
#include <random>

namespace fmvo {

using Rng = std::mt19937_64;

// Stream tags used when deriving per-module seeds from one master seed.
enum class SeedStream : std::uint64_t {
  kGenerate = 1,
  kLift = 2,
  kInit = 3,
  kTrain = 4,
  kInfer = 5,
  kCondNoise = 6,
};

// splitmix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, SeedStream stream) {
  return derive_seed(master, static_cast<std::uint64_t>(stream) << 48);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, SeedStream stream, std::uint64_t index) {
  return derive_seed(derive_seed(master, stream), index);
}

}  // namespace fmvo
