#pragma once

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rducb/rng.hpp"

namespace rducb {

// A set of input dimensions, 1-based and kept sorted.
class Component {
 public:
  Component() = default;
  explicit Component(std::vector<int> dims);
  Component(std::initializer_list<int> dims)
      : Component(std::vector<int>(dims)) {}

  const std::vector<int>& dims() const { return dims_; }
  std::size_t size() const { return dims_.size(); }
  bool is_edge() const { return dims_.size() == 2; }

  auto operator<=>(const Component&) const = default;

 private:
  std::vector<int> dims_;
};

using Edge = std::pair<int, int>;  // first < second

inline Edge make_edge(int a, int b) {
  return a < b ? Edge{a, b} : Edge{b, a};
}

// A collection of components over d dimensions. Construction only
// canonicalizes the component order; tree invariants are checked by
// validate().
class Decomposition {
 public:
  Decomposition() = default;
  Decomposition(std::size_t d, std::vector<Component> components);

  std::size_t dim() const { return d_; }
  const std::vector<Component>& components() const { return components_; }
  std::size_t size() const { return components_.size(); }

  std::vector<Edge> edges() const;
  std::size_t edge_count() const;
  bool contains(const Component& c) const;

  bool operator==(const Decomposition&) const = default;

 private:
  std::size_t d_ = 0;
  std::vector<Component> components_;
};

// Edges plus a singleton for every dimension not touched by an edge.
Decomposition tree_from_edges(std::size_t d, const std::vector<Edge>& edges);

// Every pair and every singleton over d dimensions: the union of all
// components any tree decomposition can contain.
Decomposition full_pairwise(std::size_t d);

class UnionFind {
 public:
  explicit UnionFind(std::size_t n);
  std::size_t find(std::size_t i);
  bool connected(std::size_t a, std::size_t b) { return find(a) == find(b); }
  // Returns false when a and b were already connected.
  bool unite(std::size_t a, std::size_t b);

 private:
  std::vector<std::size_t> parent_;
  std::vector<unsigned char> rank_;
};

// Random tree sampler: two random permutations of [1..d] scanned in a
// nested loop, adding every edge that joins two disconnected nodes until
// E edges exist.
Decomposition sample_random_tree(std::size_t d, std::size_t edges, Rng& rng);

// Throws Error when any tree-decomposition invariant is violated.
void validate(const Decomposition& g);

struct TreeGroup {
  std::vector<int> nodes;   // sorted
  std::vector<Edge> edges;  // sorted
};

struct ForestGroups {
  std::vector<TreeGroup> trees;  // ordered by lowest node
  std::vector<int> singletons;   // dimensions in no edge
};

ForestGroups connected_groups(const Decomposition& g);

// Empirical per-edge selection frequency over `samples` draws of
// sample_random_tree. Every one of the d(d-1)/2 edges is present in the map.
std::map<Edge, double> edge_frequencies(std::size_t d, std::size_t edges,
                                        std::size_t samples, Rng& rng);

// One component per line, e.g. "1,2\n3\n".
std::string serialize(const Decomposition& g);
// Single-line form used inside CSV fields, e.g. "1,2;3".
std::string serialize_inline(const Decomposition& g);
// Accepts either separator (';' or newline).
Decomposition parse_decomposition(std::size_t d, std::string_view text);

}  // namespace rducb
