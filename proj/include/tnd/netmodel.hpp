#pragma once

// Transit network data model: stops, directed multi-arcs with mode and
// frequency, network designs (the arc-open vector) and the predicates that
// define the feasible design set: budget, fixed arcs, per-mode flow balance
// and at most one open arc per (origin, destination, mode).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include <fmt/format.h>

#include "tnd/errors.hpp"

namespace tnd {

inline constexpr double kDefaultHourlyRate = 72.15;
inline constexpr int kDefaultFrequency = 6;
inline constexpr double kDefaultPaddingMinutes = 5.0;
inline const std::string kBus = "bus";
inline const std::string kRail = "rail";

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Node {
  std::string id;
  Point position;
  bool is_rail_station = false;
};

struct Arc {
  std::string id;
  std::string origin;
  std::string dest;
  std::string mode = kBus;
  int frequency = kDefaultFrequency;  // vehicles per hour
  double in_motion_minutes = 0.0;
  double rider_minutes = 0.0;  // in-motion time plus padding
  double cost = 0.0;           // operating cost over the planning horizon
  bool is_fixed = false;
};

/// Operating cost of running `frequency` vehicles per hour over an arc that
/// takes `in_motion_minutes`, billed at `hourly_rate` while in motion.
inline double arc_operating_cost(int frequency, double in_motion_minutes,
                                 double hourly_rate = kDefaultHourlyRate) {
  return frequency * (in_motion_minutes / 60.0) * hourly_rate;
}

struct GraphOptions {
  /// Reject graphs where a rail arc is not fixed.
  bool require_fixed_rail = true;
  /// Reject graphs whose fixed arcs leave a (node, mode) unbalanced with no free arc to compensate.
  bool require_balanced_fixed = true;
};

/// Lookup structures over the arc list: outgoing and incoming arcs per
/// (node, mode) and the parallel-arc groups per (origin, dest, mode).
struct GraphIndex {
  std::map<std::pair<int, int>, std::vector<int>> out_arcs;
  std::map<std::pair<int, int>, std::vector<int>> in_arcs;
  std::map<std::tuple<int, int, int>, std::vector<int>> pair_groups;

  bool operator==(const GraphIndex&) const = default;
};

class TransitGraph {
 public:
  TransitGraph() = default;

  TransitGraph(std::vector<Node> nodes, std::vector<Arc> arcs, GraphOptions options = {})
      : nodes_(std::move(nodes)), arcs_(std::move(arcs)) {
    modes_ = {kBus, kRail};
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Node& n = nodes_[i];
      if (!std::isfinite(n.position.x) || !std::isfinite(n.position.y))
        throw StructuralError(fmt::format("node '{}' has non-finite coordinates", n.id));
      if (!node_by_id_.emplace(n.id, static_cast<int>(i)).second)
        throw StructuralError(fmt::format("duplicate node id '{}'", n.id));
    }
    for (std::size_t i = 0; i < arcs_.size(); ++i) {
      const Arc& a = arcs_[i];
      if (!arc_by_id_.emplace(a.id, static_cast<int>(i)).second)
        throw StructuralError(fmt::format("duplicate arc id '{}'", a.id));
      if (!node_by_id_.count(a.origin) || !node_by_id_.count(a.dest))
        throw StructuralError(fmt::format("arc '{}' references an unknown node", a.id));
      if (a.origin == a.dest) throw StructuralError(fmt::format("arc '{}' is a self-loop", a.id));
      if (a.frequency <= 0) throw StructuralError(fmt::format("arc '{}' has non-positive frequency", a.id));
      if (!(a.in_motion_minutes > 0.0))
        throw StructuralError(fmt::format("arc '{}' has non-positive in-motion time", a.id));
      if (a.rider_minutes < a.in_motion_minutes)
        throw StructuralError(fmt::format("arc '{}' rider time is below its in-motion time", a.id));
      if (!(a.cost >= 0.0)) throw StructuralError(fmt::format("arc '{}' has negative cost", a.id));
      if (options.require_fixed_rail && a.mode == kRail && !a.is_fixed)
        throw StructuralError(fmt::format("rail arc '{}' must be fixed", a.id));
      if (std::find(modes_.begin(), modes_.end(), a.mode) == modes_.end()) modes_.push_back(a.mode);
    }
    for (const Arc& a : arcs_) {
      arc_from_.push_back(node_by_id_.at(a.origin));
      arc_to_.push_back(node_by_id_.at(a.dest));
      arc_mode_.push_back(mode_index(a.mode));
    }
    index_ = rebuild_index();
    if (options.require_balanced_fixed) {
      auto bad = unbalanced_fixed();
      if (!bad.empty())
        throw StructuralError(fmt::format("fixed arcs leave node '{}' unbalanced in mode '{}'",
                                          nodes_[bad.front().first].id, modes_[bad.front().second]));
    }
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Arc>& arcs() const { return arcs_; }
  const std::vector<std::string>& modes() const { return modes_; }
  const GraphIndex& index() const { return index_; }

  std::optional<int> find_node(const std::string& id) const {
    auto it = node_by_id_.find(id);
    if (it == node_by_id_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<int> find_arc(const std::string& id) const {
    auto it = arc_by_id_.find(id);
    if (it == arc_by_id_.end()) return std::nullopt;
    return it->second;
  }
  int node_index(const std::string& id) const {
    if (auto i = find_node(id)) return *i;
    throw StructuralError(fmt::format("unknown node id '{}'", id));
  }
  int arc_index(const std::string& id) const {
    if (auto i = find_arc(id)) return *i;
    throw StructuralError(fmt::format("unknown arc id '{}'", id));
  }
  int mode_index(const std::string& mode) const {
    auto it = std::find(modes_.begin(), modes_.end(), mode);
    if (it == modes_.end()) throw StructuralError(fmt::format("unknown mode '{}'", mode));
    return static_cast<int>(it - modes_.begin());
  }
  int arc_origin(int a) const { return arc_from_[static_cast<std::size_t>(a)]; }
  int arc_dest(int a) const { return arc_to_[static_cast<std::size_t>(a)]; }
  int arc_mode(int a) const { return arc_mode_[static_cast<std::size_t>(a)]; }

  std::span<const int> out_arcs(int node, int mode) const { return lookup(index_.out_arcs, {node, mode}); }
  std::span<const int> in_arcs(int node, int mode) const { return lookup(index_.in_arcs, {node, mode}); }
  std::span<const int> parallel_arcs(int from, int to, int mode) const {
    auto it = index_.pair_groups.find({from, to, mode});
    if (it == index_.pair_groups.end()) return {};
    return it->second;
  }

  /// Recomputes the lookup structures from the arc list alone.
  GraphIndex rebuild_index() const {
    GraphIndex idx;
    for (std::size_t i = 0; i < arcs_.size(); ++i) {
      int a = static_cast<int>(i);
      int o = arc_origin(a), d = arc_dest(a), m = arc_mode(a);
      idx.out_arcs[{o, m}].push_back(a);
      idx.in_arcs[{d, m}].push_back(a);
      idx.pair_groups[{o, d, m}].push_back(a);
    }
    return idx;
  }

  /// (node, mode) pairs whose fixed-arc imbalance no free arc of that mode could offset.
  std::vector<std::pair<int, int>> unbalanced_fixed() const {
    std::map<std::pair<int, int>, long long> imbalance;
    std::map<std::pair<int, int>, bool> has_free;
    for (std::size_t i = 0; i < arcs_.size(); ++i) {
      int a = static_cast<int>(i);
      int o = arc_origin(a), d = arc_dest(a), m = arc_mode(a);
      if (arcs_[a].is_fixed) {
        imbalance[{o, m}] += arcs_[a].frequency;
        imbalance[{d, m}] -= arcs_[a].frequency;
      } else {
        has_free[{o, m}] = true;
        has_free[{d, m}] = true;
      }
    }
    std::vector<std::pair<int, int>> bad;
    for (const auto& [key, value] : imbalance)
      if (value != 0 && !has_free[key]) bad.push_back(key);
    return bad;
  }

 private:
  template <class Map>
  static std::span<const int> lookup(const Map& map, const std::pair<int, int>& key) {
    auto it = map.find(key);
    if (it == map.end()) return {};
    return it->second;
  }

  std::vector<Node> nodes_;
  std::vector<Arc> arcs_;
  std::vector<std::string> modes_;
  std::unordered_map<std::string, int> node_by_id_;
  std::unordered_map<std::string, int> arc_by_id_;
  std::vector<int> arc_from_, arc_to_, arc_mode_;
  GraphIndex index_;
};

/// The arc-open vector z, aligned with the arc list of one graph.
struct NetworkDesign {
  std::vector<std::uint8_t> open;

  static NetworkDesign all_closed(const TransitGraph& g) { return {std::vector<std::uint8_t>(g.arcs().size(), 0)}; }
  static NetworkDesign all_open(const TransitGraph& g) { return {std::vector<std::uint8_t>(g.arcs().size(), 1)}; }
  static NetworkDesign fixed_only(const TransitGraph& g) {
    NetworkDesign d = all_closed(g);
    for (std::size_t i = 0; i < g.arcs().size(); ++i) d.open[i] = g.arcs()[i].is_fixed ? 1 : 0;
    return d;
  }
  /// Builds a design from an id -> open map; every arc must be listed exactly once.
  static NetworkDesign from_map(const TransitGraph& g, const std::map<std::string, bool>& flags) {
    NetworkDesign d = all_closed(g);
    std::vector<bool> seen(g.arcs().size(), false);
    for (const auto& [id, on] : flags) {
      auto idx = g.find_arc(id);
      if (!idx) throw StructuralError(fmt::format("design references unknown arc '{}'", id));
      d.open[*idx] = on ? 1 : 0;
      seen[*idx] = true;
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
      if (!seen[i]) throw StructuralError(fmt::format("design does not define arc '{}'", g.arcs()[i].id));
    return d;
  }

  bool is_open(int arc) const { return open[static_cast<std::size_t>(arc)] != 0; }
  std::size_t open_count() const { return static_cast<std::size_t>(std::count(open.begin(), open.end(), 1)); }
  bool operator==(const NetworkDesign&) const = default;
};

inline void require_same_shape(const NetworkDesign& design, const TransitGraph& graph) {
  if (design.open.size() != graph.arcs().size())
    throw StructuralError(fmt::format("design has {} entries but graph has {} arcs", design.open.size(),
                                      graph.arcs().size()));
}

inline double budget_cost(const NetworkDesign& design, const TransitGraph& graph) {
  require_same_shape(design, graph);
  double total = 0.0;
  for (std::size_t i = 0; i < graph.arcs().size(); ++i)
    if (design.open[i] && graph.arcs()[i].cost != 0.0) total += graph.arcs()[i].cost;
  return total;
}

struct Imbalance {
  std::string node;
  std::string mode;
  long long imbalance = 0;  // outgoing minus incoming vehicles per hour

  bool operator==(const Imbalance&) const = default;
};

inline std::vector<Imbalance> check_flow_balance(const NetworkDesign& design, const TransitGraph& graph) {
  require_same_shape(design, graph);
  std::vector<Imbalance> out;
  for (std::size_t n = 0; n < graph.nodes().size(); ++n) {
    for (std::size_t m = 0; m < graph.modes().size(); ++m) {
      long long flow = 0;
      for (int a : graph.out_arcs(static_cast<int>(n), static_cast<int>(m)))
        if (design.is_open(a)) flow += graph.arcs()[a].frequency;
      for (int a : graph.in_arcs(static_cast<int>(n), static_cast<int>(m)))
        if (design.is_open(a)) flow -= graph.arcs()[a].frequency;
      if (flow != 0) out.push_back({graph.nodes()[n].id, graph.modes()[m], flow});
    }
  }
  return out;
}

struct PairModeViolation {
  std::string origin;
  std::string dest;
  std::string mode;
  std::vector<std::string> open_arcs;
};

/// Violations grouped by constraint family; empty means the design is in Z.
struct FeasibilityReport {
  std::optional<double> over_budget_cost;  // set when cost exceeds the budget
  std::vector<std::string> closed_fixed_arcs;
  std::vector<Imbalance> flow_imbalances;
  std::vector<PairModeViolation> pair_mode;

  bool feasible() const {
    return !over_budget_cost && closed_fixed_arcs.empty() && flow_imbalances.empty() && pair_mode.empty();
  }
  std::vector<std::string> violated_families() const {
    std::vector<std::string> f;
    if (over_budget_cost) f.emplace_back("budget");
    if (!closed_fixed_arcs.empty()) f.emplace_back("fixed arcs");
    if (!flow_imbalances.empty()) f.emplace_back("flow balance");
    if (!pair_mode.empty()) f.emplace_back("pair-mode");
    return f;
  }
};

/// Relative slack used when comparing accumulated costs to the budget.
inline bool within_budget(double cost, double budget) {
  return cost <= budget + 1e-9 * std::max(1.0, std::abs(budget));
}

inline FeasibilityReport check_design_feasibility(const NetworkDesign& design, const TransitGraph& graph,
                                                  double budget) {
  FeasibilityReport report;
  double cost = budget_cost(design, graph);
  if (!within_budget(cost, budget)) report.over_budget_cost = cost;
  for (std::size_t i = 0; i < graph.arcs().size(); ++i)
    if (graph.arcs()[i].is_fixed && !design.open[i]) report.closed_fixed_arcs.push_back(graph.arcs()[i].id);
  report.flow_imbalances = check_flow_balance(design, graph);
  for (const auto& [key, group] : graph.index().pair_groups) {
    std::vector<std::string> open;
    for (int a : group)
      if (design.is_open(a)) open.push_back(graph.arcs()[a].id);
    if (open.size() > 1) {
      auto [o, d, m] = key;
      report.pair_mode.push_back(
          {graph.nodes()[o].id, graph.nodes()[d].id, graph.modes()[m], std::move(open)});
    }
  }
  return report;
}

}  // namespace tnd
