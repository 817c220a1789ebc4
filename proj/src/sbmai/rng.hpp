#pragma once

#include <cstdint>

namespace sbmai {

// Counter-based random numbers. Every draw is a pure function of
// (key, stream, index), so sampling order and thread count never change the
// values, and two streams under one key never share draws.
enum class Stream : std::uint64_t {
  kLabels = 1,
  kEdges = 2,
  kNoise = 3,
  kInstance = 4,  // derivation of per-instance keys
  kChain = 5,     // derivation of per-chain keys
  kSweep = 6,     // heat-bath site updates
  kInit = 7,      // random chain initialisation
};

std::uint64_t mix64(std::uint64_t z);

std::uint64_t counter_u64(std::uint64_t key, Stream stream, std::uint64_t index);

// Key for the index-th child of `key` under `stream`.
inline std::uint64_t derive_key(std::uint64_t key, Stream stream,
                                std::uint64_t index) {
  return counter_u64(key, stream, index);
}

// Uniform in [0, 1) with 53 random bits.
double uniform01(std::uint64_t bits);

// Uniform in the open interval (0, 1).
double uniform_open(std::uint64_t bits);

// Standard normal by inverse CDF of an open-interval uniform.
double standard_normal(std::uint64_t bits);

}  // namespace sbmai
