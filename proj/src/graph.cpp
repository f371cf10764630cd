#include "udsgd/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "udsgd/errors.hpp"
#include "udsgd/rng.hpp"

namespace udsgd {

namespace {

// BFS over adjacency lists; returns number of nodes reachable from 0.
int reachable_from_zero(const std::vector<std::vector<int>>& adj) {
  if (adj.empty()) return 0;
  std::vector<char> seen(adj.size(), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[std::size_t(u)]) {
      if (!seen[std::size_t(v)]) {
        seen[std::size_t(v)] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count;
}

}  // namespace

Graph Graph::build(const std::vector<std::pair<int, int>>& dense_edges,
                   std::vector<int> original_ids) {
  const int n = int(original_ids.size());
  if (n < 2) {
    throw ValidationError("graph must have at least 2 nodes, got " +
                          std::to_string(n));
  }
  Graph g;
  g.adj_.assign(std::size_t(n), {});
  std::set<std::pair<int, int>> unique;
  for (auto [u, v] : dense_edges) {
    if (u == v) {
      throw ValidationError("self-loop on node " +
                            std::to_string(original_ids[std::size_t(u)]) +
                            " is not allowed");
    }
    if (u < 0 || v < 0 || u >= n || v >= n) {
      throw ValidationError("edge endpoint out of range [0, " +
                            std::to_string(n) + ")");
    }
    auto key = std::minmax(u, v);
    if (!unique.insert(key).second) continue;  // duplicates collapse
    g.adj_[std::size_t(u)].push_back(v);
    g.adj_[std::size_t(v)].push_back(u);
  }
  g.edge_count_ = int(unique.size());
  for (auto& nbrs : g.adj_) std::sort(nbrs.begin(), nbrs.end());
  g.original_ids_ = std::move(original_ids);
  if (reachable_from_zero(g.adj_) != n) {
    throw ValidationError(
        "graph is disconnected: every analysis here assumes a single "
        "connected component");
  }
  return g;
}

Graph Graph::from_edge_list_text(std::string_view text) {
  std::vector<std::pair<long, long>> raw_edges;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    std::vector<long> fields;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' ||
                                 line[i] == '\r' || line[i] == ','))
        ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t' &&
             line[j] != '\r' && line[j] != ',')
        ++j;
      long value = 0;
      const auto res =
          std::from_chars(line.data() + i, line.data() + j, value);
      if (res.ec != std::errc() || res.ptr != line.data() + j || value < 0) {
        throw ValidationError(
            "edge list line " + std::to_string(line_no) +
            ": expected a non-negative integer, got '" +
            std::string(line.substr(i, j - i)) + "'");
      }
      fields.push_back(value);
      i = j;
    }
    if (fields.empty()) continue;  // blank or comment-only line
    if (fields.size() != 2) {
      throw ValidationError("edge list line " + std::to_string(line_no) +
                            ": expected exactly two node ids, got " +
                            std::to_string(fields.size()));
    }
    if (fields[0] == fields[1]) {
      throw ValidationError("edge list line " + std::to_string(line_no) +
                            ": self-loop on node " +
                            std::to_string(fields[0]) + " is not allowed");
    }
    raw_edges.emplace_back(fields[0], fields[1]);
  }
  if (raw_edges.empty()) {
    throw ValidationError("edge list contains no edges");
  }

  // Densify arbitrary labels to 0..n-1 in sorted order.
  std::map<long, int> dense;
  for (auto [u, v] : raw_edges) {
    dense.emplace(u, 0);
    dense.emplace(v, 0);
  }
  std::vector<int> original_ids;
  original_ids.reserve(dense.size());
  for (auto& [label, idx] : dense) {
    idx = int(original_ids.size());
    original_ids.push_back(int(label));
  }
  std::vector<std::pair<int, int>> edges;
  edges.reserve(raw_edges.size());
  for (auto [u, v] : raw_edges) edges.emplace_back(dense[u], dense[v]);
  return build(edges, std::move(original_ids));
}

Graph Graph::load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open edge list file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_edge_list_text(ss.str());
}

Graph Graph::from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> ids(std::size_t(std::max(n, 0)));
  for (int i = 0; i < n; ++i) ids[std::size_t(i)] = i;
  return build(edges, std::move(ids));
}

Graph Graph::path(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return from_edges(n, edges);
}

Graph Graph::ring(int n) {
  if (n < 3) throw ValidationError("ring requires at least 3 nodes");
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  return from_edges(n, edges);
}

Graph Graph::complete(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return from_edges(n, edges);
}

Graph Graph::random_connected(int n, double edge_prob, std::uint64_t seed) {
  if (n < 2) throw ValidationError("random_connected requires n >= 2");
  if (!(edge_prob > 0.0) || edge_prob > 1.0) {
    throw ValidationError("edge_prob must lie in (0, 1]");
  }
  constexpr int kMaxAttempts = 1000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(derive_seed(seed, 0x67726170 /* "grap" */, std::uint64_t(attempt)));
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.next_unit() < edge_prob) edges.emplace_back(i, j);
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (auto [u, v] : edges) {
      adj[std::size_t(u)].push_back(v);
      adj[std::size_t(v)].push_back(u);
    }
    if (reachable_from_zero(adj) == n) return from_edges(n, edges);
  }
  throw ValidationError(
      "random_connected: no connected draw in 1000 attempts; raise edge_prob "
      "(roughly > ln(n)/n) or reduce n");
}

bool Graph::has_edge(int u, int v) const {
  const auto& nbrs = adj_[std::size_t(u)];
  return std::binary_search(nbrs.begin(), nbrs.end(), v);
}

bool Graph::is_connected() const {
  return reachable_from_zero(adj_) == node_count();
}

bool Graph::is_bipartite() const {
  const int n = node_count();
  std::vector<int> color(std::size_t(n), -1);
  std::vector<int> stack{0};
  color[0] = 0;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj_[std::size_t(u)]) {
      if (color[std::size_t(v)] < 0) {
        color[std::size_t(v)] = 1 - color[std::size_t(u)];
        stack.push_back(v);
      } else if (color[std::size_t(v)] == color[std::size_t(u)]) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace udsgd
