#pragma once

#include <cstdint>
#include <random>

namespace rducb {

using Rng = std::mt19937_64;

// Independent random streams derived from one master seed. Each stream is
// addressed by (kind, counter), typically counter = round index.
enum class Stream : std::uint64_t {
  kInitialDesign = 1,
  kTree = 2,
  kFit = 3,
  kOptimizer = 4,
  kRandomSearch = 5,
  kStructure = 6,
};

std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                          std::uint64_t counter);

inline Rng stream_rng(std::uint64_t master, Stream stream,
                      std::uint64_t counter) {
  return Rng(derive_seed(master, stream, counter));
}

}  // namespace rducb
