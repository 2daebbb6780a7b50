#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rducb {

// Outcome of a property check: pass/fail plus human-readable lines with
// the measured quantities and tolerances.
struct CheckReport {
  bool passed = false;
  std::vector<std::string> lines;
};

// Empirical edge frequencies of the random tree sampler against the
// 4-sigma binomial band around 2E / (d(d-1)).
CheckReport check_edge_uniformity(std::size_t d, std::size_t edges,
                                  std::size_t samples, std::uint64_t seed);

// Information gain of a random tree kernel never exceeds that of the
// kernel with every pairwise and unary component.
CheckReport check_infogain(std::size_t d, std::size_t points, std::size_t trials,
                           std::uint64_t seed);

// Message-passing maximizer against exhaustive grid enumeration on small
// random instances (d <= max_d, grid size <= max_grid).
CheckReport check_mp_exactness(std::size_t trials, std::uint64_t seed,
                               std::size_t max_d = 4, std::size_t max_grid = 15);

}  // namespace rducb
