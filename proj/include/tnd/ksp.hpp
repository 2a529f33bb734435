#pragma once

// Loopless k-shortest paths (Yen) over a small directed multigraph with
// non-negative edge weights. Paths are reported in nondecreasing cost; paths
// of equal cost are ordered by their edge-key sequence.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace tnd {

struct RoutingEdge {
  int from = 0;
  int to = 0;
  double cost = 0.0;
  std::string key;  // tie-break label; equal-cost paths compare by key sequence
};

class RoutingGraph {
 public:
  explicit RoutingGraph(int node_count = 0) : out_(static_cast<std::size_t>(node_count)) {}

  int add_node() {
    out_.emplace_back();
    return static_cast<int>(out_.size()) - 1;
  }
  int add_edge(int from, int to, double cost, std::string key) {
    edges_.push_back({from, to, cost, std::move(key)});
    int e = static_cast<int>(edges_.size()) - 1;
    out_[static_cast<std::size_t>(from)].push_back(e);
    ranks_valid_ = false;
    return e;
  }

  int node_count() const { return static_cast<int>(out_.size()); }
  const std::vector<RoutingEdge>& edges() const { return edges_; }
  const std::vector<int>& out_edges(int node) const { return out_[static_cast<std::size_t>(node)]; }

  /// Position of each edge in (key, index) order; lexicographic comparison of
  /// rank sequences equals comparison of key sequences.
  const std::vector<int>& key_ranks() const {
    if (!ranks_valid_) {
      std::vector<int> order(edges_.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (edges_[a].key != edges_[b].key) return edges_[a].key < edges_[b].key;
        return a < b;
      });
      ranks_.assign(edges_.size(), 0);
      for (std::size_t r = 0; r < order.size(); ++r) ranks_[order[r]] = static_cast<int>(r);
      ranks_valid_ = true;
    }
    return ranks_;
  }

 private:
  std::vector<RoutingEdge> edges_;
  std::vector<std::vector<int>> out_;
  mutable std::vector<int> ranks_;
  mutable bool ranks_valid_ = false;
};

struct RoutedPath {
  std::vector<int> edges;
  double cost = 0.0;
};

/// Cost summed edge by edge in path order, so equal edge sequences always give equal costs.
inline double path_cost(const RoutingGraph& g, const std::vector<int>& edges) {
  double c = 0.0;
  for (int e : edges) c += g.edges()[e].cost;
  return c;
}

/// Strict ordering by (cost, key sequence).
inline bool path_less(const RoutingGraph& g, const RoutedPath& a, const RoutedPath& b) {
  if (a.cost != b.cost) return a.cost < b.cost;
  const auto& rank = g.key_ranks();
  return std::lexicographical_compare(a.edges.begin(), a.edges.end(), b.edges.begin(), b.edges.end(),
                                      [&](int x, int y) { return rank[x] < rank[y]; });
}

namespace detail {

/// Dijkstra from `source` to `target` avoiding blocked nodes and edges.
inline std::optional<std::vector<int>> dijkstra(const RoutingGraph& g, int source, int target,
                                                const std::vector<char>& blocked_node,
                                                const std::vector<char>& blocked_edge) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(static_cast<std::size_t>(g.node_count()), inf);
  std::vector<int> via(static_cast<std::size_t>(g.node_count()), -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[source] = 0.0;
  queue.push({0.0, source});
  while (!queue.empty()) {
    auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u]) continue;
    if (u == target) break;
    for (int e : g.out_edges(u)) {
      if (blocked_edge[e]) continue;
      const auto& edge = g.edges()[e];
      if (blocked_node[edge.to]) continue;
      double nd = d + edge.cost;
      if (nd < dist[edge.to]) {
        dist[edge.to] = nd;
        via[edge.to] = e;
        queue.push({nd, edge.to});
      }
    }
  }
  if (dist[target] == inf) return std::nullopt;
  std::vector<int> edges;
  for (int v = target; v != source; v = g.edges()[via[v]].from) edges.push_back(via[v]);
  std::reverse(edges.begin(), edges.end());
  return edges;
}

}  // namespace detail

/// Yields loopless source->target paths one at a time in nondecreasing cost.
class YenEnumerator {
 public:
  YenEnumerator(const RoutingGraph& g, int source, int target)
      : g_(g), source_(source), target_(target),
        blocked_node_(static_cast<std::size_t>(g.node_count()), 0),
        blocked_edge_(g.edges().size(), 0),
        candidates_([this](const RoutedPath& a, const RoutedPath& b) { return path_less(g_, a, b); }) {}

  std::optional<RoutedPath> next() {
    if (source_ == target_) return std::nullopt;
    if (found_.empty()) {
      if (started_) return std::nullopt;
      started_ = true;
      auto first = detail::dijkstra(g_, source_, target_, blocked_node_, blocked_edge_);
      if (!first) return std::nullopt;
      found_.push_back({*first, path_cost(g_, *first)});
      return found_.back();
    }
    spur_from(found_.back());
    while (!candidates_.empty()) {
      RoutedPath best = *candidates_.begin();
      candidates_.erase(candidates_.begin());
      if (std::find_if(found_.begin(), found_.end(), [&](const RoutedPath& p) { return p.edges == best.edges; }) !=
          found_.end())
        continue;
      found_.push_back(std::move(best));
      return found_.back();
    }
    return std::nullopt;
  }

 private:
  void spur_from(const RoutedPath& last) {
    std::vector<int> nodes{source_};
    for (int e : last.edges) nodes.push_back(g_.edges()[e].to);
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
      const int spur = nodes[i];
      std::vector<int> root(last.edges.begin(), last.edges.begin() + static_cast<std::ptrdiff_t>(i));
      for (const RoutedPath& p : found_)
        if (p.edges.size() > i && std::equal(root.begin(), root.end(), p.edges.begin()))
          blocked_edge_[p.edges[i]] = 1;
      for (std::size_t j = 0; j < i; ++j) blocked_node_[nodes[j]] = 1;
      if (auto tail = detail::dijkstra(g_, spur, target_, blocked_node_, blocked_edge_)) {
        RoutedPath cand{root, 0.0};
        cand.edges.insert(cand.edges.end(), tail->begin(), tail->end());
        cand.cost = path_cost(g_, cand.edges);
        candidates_.insert(std::move(cand));
      }
      std::fill(blocked_edge_.begin(), blocked_edge_.end(), 0);
      std::fill(blocked_node_.begin(), blocked_node_.end(), 0);
    }
  }

  const RoutingGraph& g_;
  int source_;
  int target_;
  bool started_ = false;
  std::vector<RoutedPath> found_;
  std::vector<char> blocked_node_;
  std::vector<char> blocked_edge_;
  std::set<RoutedPath, std::function<bool(const RoutedPath&, const RoutedPath&)>> candidates_;
};

/// Up to `k` loopless paths passing `accept`, cheapest first. Paths tied with
/// the k-th cost are all examined before truncation so the (cost, key)
/// order decides which survive. `max_pops` bounds the number of enumerated
/// paths (accepted or not).
inline std::vector<RoutedPath> k_shortest_paths(
    const RoutingGraph& g, int source, int target, std::size_t k,
    const std::function<bool(const RoutedPath&)>& accept = {}, std::size_t max_pops = 0) {
  std::vector<RoutedPath> kept;
  if (k == 0) return kept;
  YenEnumerator yen(g, source, target);
  std::size_t pops = 0;
  while (auto p = yen.next()) {
    ++pops;
    if (kept.size() >= k && p->cost > kept[k - 1].cost) break;
    if (!accept || accept(*p)) kept.push_back(std::move(*p));
    if (max_pops && pops >= max_pops) break;
  }
  std::stable_sort(kept.begin(), kept.end(), [&](const RoutedPath& a, const RoutedPath& b) { return path_less(g, a, b); });
  if (kept.size() > k) kept.resize(k);
  return kept;
}

}  // namespace tnd
