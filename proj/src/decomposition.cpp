#include "rducb/decomposition.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <set>

#include "rducb/error.hpp"

namespace rducb {

Component::Component(std::vector<int> dims) : dims_(std::move(dims)) {
  std::sort(dims_.begin(), dims_.end());
}

Decomposition::Decomposition(std::size_t d, std::vector<Component> components)
    : d_(d), components_(std::move(components)) {
  std::sort(components_.begin(), components_.end());
}

std::vector<Edge> Decomposition::edges() const {
  std::vector<Edge> out;
  for (const auto& c : components_) {
    if (c.is_edge()) out.push_back(make_edge(c.dims()[0], c.dims()[1]));
  }
  return out;
}

std::size_t Decomposition::edge_count() const {
  return static_cast<std::size_t>(
      std::count_if(components_.begin(), components_.end(),
                    [](const Component& c) { return c.is_edge(); }));
}

bool Decomposition::contains(const Component& c) const {
  return std::binary_search(components_.begin(), components_.end(), c);
}

Decomposition tree_from_edges(std::size_t d, const std::vector<Edge>& edges) {
  std::vector<bool> covered(d + 1, false);
  std::vector<Component> comps;
  for (const auto& [a, b] : edges) {
    comps.push_back(Component{a, b});
    if (a >= 1 && static_cast<std::size_t>(a) <= d) covered[a] = true;
    if (b >= 1 && static_cast<std::size_t>(b) <= d) covered[b] = true;
  }
  for (std::size_t i = 1; i <= d; ++i) {
    if (!covered[i]) comps.push_back(Component{static_cast<int>(i)});
  }
  return Decomposition(d, std::move(comps));
}

Decomposition full_pairwise(std::size_t d) {
  std::vector<Component> comps;
  for (int i = 1; i <= static_cast<int>(d); ++i) {
    comps.push_back(Component{i});
    for (int j = i + 1; j <= static_cast<int>(d); ++j) {
      comps.push_back(Component{i, j});
    }
  }
  return Decomposition(d, std::move(comps));
}

UnionFind::UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t UnionFind::find(std::size_t i) {
  std::size_t root = i;
  while (parent_[root] != root) root = parent_[root];
  while (parent_[i] != root) {
    std::size_t next = parent_[i];
    parent_[i] = root;
    i = next;
  }
  return root;
}

bool UnionFind::unite(std::size_t a, std::size_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (rank_[a] < rank_[b]) std::swap(a, b);
  parent_[b] = a;
  if (rank_[a] == rank_[b]) ++rank_[a];
  return true;
}

Decomposition sample_random_tree(std::size_t d, std::size_t edges, Rng& rng) {
  if (d == 0) {
    throw Error(ErrorCode::kInvalidParameter,
                "sample_random_tree: d must be positive");
  }
  if (edges > d - 1) {
    throw Error(ErrorCode::kInvalidParameter,
                "sample_random_tree: E=" + std::to_string(edges) +
                    " exceeds d-1=" + std::to_string(d - 1));
  }
  if (edges == 0) return tree_from_edges(d, {});
  std::vector<int> nodes(d);
  std::iota(nodes.begin(), nodes.end(), 1);
  std::vector<int> in = nodes;
  std::vector<int> out = nodes;
  std::shuffle(in.begin(), in.end(), rng);
  std::shuffle(out.begin(), out.end(), rng);

  UnionFind uf(d + 1);
  std::vector<Edge> picked;
  for (int n_in : in) {
    for (int n_out : out) {
      if (!uf.connected(n_in, n_out)) {
        uf.unite(n_in, n_out);
        picked.push_back(make_edge(n_in, n_out));
      }
      if (picked.size() == edges) return tree_from_edges(d, picked);
    }
  }
  return tree_from_edges(d, picked);
}

void validate(const Decomposition& g) {
  const std::size_t d = g.dim();
  if (d == 0) {
    throw Error(ErrorCode::kInvalidParameter, "decomposition has d = 0");
  }
  std::vector<int> singleton_count(d + 1, 0);
  std::vector<bool> in_edge(d + 1, false);
  for (const auto& c : g.components()) {
    if (c.size() == 0) {
      throw Error(ErrorCode::kInvalidParameter, "empty component");
    }
    if (c.size() > 2) {
      throw Error(ErrorCode::kComponentTooLarge,
                  "component of size " + std::to_string(c.size()));
    }
    for (int i : c.dims()) {
      if (i < 1 || static_cast<std::size_t>(i) > d) {
        throw Error(ErrorCode::kDimensionOutOfRange,
                    "dimension " + std::to_string(i) + " outside [1.." +
                        std::to_string(d) + "]");
      }
    }
    if (c.is_edge()) {
      if (c.dims()[0] == c.dims()[1]) {
        throw Error(ErrorCode::kInvalidParameter,
                    "duplicate index in component");
      }
      in_edge[c.dims()[0]] = true;
      in_edge[c.dims()[1]] = true;
    } else {
      ++singleton_count[c.dims()[0]];
    }
  }
  for (std::size_t i = 1; i <= d; ++i) {
    if (!in_edge[i] && singleton_count[i] == 0) {
      throw Error(ErrorCode::kDimensionUncovered,
                  "dimension " + std::to_string(i) + " is not covered");
    }
  }
  UnionFind uf(d + 1);
  for (const auto& [a, b] : g.edges()) {
    if (!uf.unite(a, b)) {
      throw Error(ErrorCode::kCycleDetected,
                  "edge " + std::to_string(a) + "," + std::to_string(b) +
                      " closes a cycle");
    }
  }
  for (std::size_t i = 1; i <= d; ++i) {
    if (singleton_count[i] > 1 || (in_edge[i] && singleton_count[i] > 0)) {
      throw Error(ErrorCode::kInvalidParameter,
                  "dimension " + std::to_string(i) +
                      " has a redundant singleton component");
    }
  }
}

ForestGroups connected_groups(const Decomposition& g) {
  validate(g);
  const std::size_t d = g.dim();
  UnionFind uf(d + 1);
  const auto edges = g.edges();
  std::vector<bool> in_edge(d + 1, false);
  for (const auto& [a, b] : edges) {
    uf.unite(a, b);
    in_edge[a] = in_edge[b] = true;
  }
  ForestGroups out;
  std::map<std::size_t, std::size_t> root_to_group;
  for (std::size_t i = 1; i <= d; ++i) {
    if (!in_edge[i]) {
      out.singletons.push_back(static_cast<int>(i));
      continue;
    }
    const std::size_t r = uf.find(i);
    auto [it, inserted] = root_to_group.try_emplace(r, out.trees.size());
    if (inserted) out.trees.emplace_back();
    out.trees[it->second].nodes.push_back(static_cast<int>(i));
  }
  for (const auto& e : edges) {
    out.trees[root_to_group.at(uf.find(e.first))].edges.push_back(e);
  }
  return out;
}

std::map<Edge, double> edge_frequencies(std::size_t d, std::size_t edges,
                                        std::size_t samples, Rng& rng) {
  if (samples == 0) {
    throw Error(ErrorCode::kInvalidParameter,
                "edge_frequencies: samples must be positive");
  }
  std::map<Edge, std::size_t> counts;
  for (int i = 1; i <= static_cast<int>(d); ++i) {
    for (int j = i + 1; j <= static_cast<int>(d); ++j) counts[{i, j}] = 0;
  }
  for (std::size_t s = 0; s < samples; ++s) {
    for (const auto& e : sample_random_tree(d, edges, rng).edges()) {
      ++counts[e];
    }
  }
  std::map<Edge, double> freq;
  for (const auto& [e, n] : counts) {
    freq[e] = static_cast<double>(n) / static_cast<double>(samples);
  }
  return freq;
}

namespace {

std::string join_component(const Component& c) {
  std::string s;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (k) s += ',';
    s += std::to_string(c.dims()[k]);
  }
  return s;
}

}  // namespace

std::string serialize(const Decomposition& g) {
  std::string s;
  for (const auto& c : g.components()) {
    s += join_component(c);
    s += '\n';
  }
  return s;
}

std::string serialize_inline(const Decomposition& g) {
  std::string s;
  for (std::size_t k = 0; k < g.components().size(); ++k) {
    if (k) s += ';';
    s += join_component(g.components()[k]);
  }
  return s;
}

Decomposition parse_decomposition(std::size_t d, std::string_view text) {
  std::vector<Component> comps;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find_first_of(";\n", pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view item = text.substr(pos, end - pos);
    if (!item.empty()) {
      std::vector<int> dims;
      std::size_t p = 0;
      while (p <= item.size()) {
        std::size_t q = item.find(',', p);
        if (q == std::string_view::npos) q = item.size();
        int v = 0;
        auto tok = item.substr(p, q - p);
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || ptr != tok.data() + tok.size()) {
          throw Error(ErrorCode::kParseError,
                      "bad component '" + std::string(item) + "'");
        }
        dims.push_back(v);
        p = q + 1;
      }
      comps.emplace_back(std::move(dims));
    }
    pos = end + 1;
  }
  return Decomposition(d, std::move(comps));
}

}  // namespace rducb
