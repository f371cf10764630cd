#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace udsgd {

// Undirected simple graph over dense node ids 0..n-1 with sorted adjacency
// lists. Construction validates: n >= 2, no self-loops, connected. Edge-list
// text may use arbitrary non-negative integer labels; they are densified in
// sorted order and the original labels kept for reporting.
class Graph {
 public:
  // Parses "u v" pairs, one edge per line. '#' starts a comment; blank lines
  // are skipped; duplicate edges collapse. Throws ValidationError with a line
  // number on malformed input, self-loops, disconnectedness, or n < 2.
  static Graph from_edge_list_text(std::string_view text);
  static Graph load_edge_list(const std::string& path);

  // Programmatic construction over ids 0..n-1 (used by generators/tests).
  static Graph from_edges(int n, const std::vector<std::pair<int, int>>& edges);

  static Graph path(int n);
  static Graph ring(int n);
  static Graph complete(int n);

  // Erdos-Renyi G(n, edge_prob) conditioned on connectivity: redraw until
  // connected, at most 1000 attempts, then fail with guidance. Same seed,
  // same graph.
  static Graph random_connected(int n, double edge_prob, std::uint64_t seed);

  int node_count() const { return int(adj_.size()); }
  int edge_count() const { return edge_count_; }
  int degree(int v) const { return int(adj_[std::size_t(v)].size()); }
  const std::vector<int>& neighbors(int v) const { return adj_[std::size_t(v)]; }
  long degree_total() const { return 2L * edge_count_; }  // sum of degrees
  bool has_edge(int u, int v) const;

  // Diagnostics (recomputed; construction already guarantees connectivity).
  bool is_connected() const;
  // True iff 2-colorable; simple random walks mix only on non-bipartite
  // graphs, so analysis code uses this for error messages.
  bool is_bipartite() const;

  // Label the node carried in the input edge list (identity for generators).
  int original_id(int v) const { return original_ids_[std::size_t(v)]; }

 private:
  Graph() = default;
  static Graph build(const std::vector<std::pair<int, int>>& dense_edges,
                     std::vector<int> original_ids);

  std::vector<std::vector<int>> adj_;
  std::vector<int> original_ids_;
  int edge_count_ = 0;
};

}  // namespace udsgd
