#pragma once

#include <cstdint>
#include <random>

namespace bois {

using Rng = std::mt19937_64;

/// Logical owners of random streams within one run.
enum class StreamTag : std::uint64_t {
  SharedInit = 1,
  Optimizer = 2,
  Measurement = 3,
  FinalMeasurement = 4,
  Repetition = 5,
  Builder = 6,
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Seed for the stream (tag, index) under `master`. Counter-based, so the
/// result does not depend on the order in which streams are requested.
std::uint64_t derive_seed(std::uint64_t master, StreamTag tag, std::uint64_t index = 0);

inline Rng derive_stream(std::uint64_t master, StreamTag tag, std::uint64_t index = 0) {
  return Rng(derive_seed(master, tag, index));
}

}  // namespace bois
