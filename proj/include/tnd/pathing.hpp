#pragma once

// Candidate path sets. Trip endpoints are linked to their nearest stops by
// walking legs, and each trip keeps its w fastest loopless paths through the
// network with every arc open. A path is usable under a design when all of
// its transit arcs are open.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <istream>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <fmt/format.h>

#include "tnd/demand.hpp"
#include "tnd/ksp.hpp"
#include "tnd/netmodel.hpp"
#include "tnd/parallel.hpp"
#include "tnd/path_features.hpp"
#include "tnd/text_io.hpp"

namespace tnd {

struct PathingConfig {
  int k_access = 5;               // stops linked to each trip endpoint
  double walk_speed = 80.0;       // meters per minute
  int paths_per_trip = 4;         // w_r
  double walk_cap_minutes = 30.0; // paths walking longer than this are discarded
  unsigned threads = 1;
};

/// One candidate transit path of a trip. The walking access and egress legs
/// are summarized by `walk_minutes`; `arcs` are the transit legs in order.
struct Path {
  std::string id;
  std::string trip_id;
  int rank = 0;
  std::vector<int> arcs;
  double total_minutes = 0.0;
  double walk_minutes = 0.0;
  double in_vehicle_minutes = 0.0;
  int transfers = 0;

  PathFeatures features() const { return {total_minutes, transfers, walk_minutes, in_vehicle_minutes}; }
  bool transit_free() const { return arcs.empty(); }
};

/// Number of mode changes between consecutive transit legs. Same-mode
/// arc-to-arc continuation is free because arcs are not grouped into lines.
inline int count_transfers(const TransitGraph& graph, const std::vector<int>& arcs) {
  int transfers = 0;
  for (std::size_t i = 1; i < arcs.size(); ++i)
    if (graph.arcs()[arcs[i]].mode != graph.arcs()[arcs[i - 1]].mode) ++transfers;
  return transfers;
}

inline std::string make_path_id(const std::string& trip_id, int rank) { return fmt::format("{}#{}", trip_id, rank); }

/// Paths per trip, aligned with the population's trip order.
class PathSet {
 public:
  PathSet() = default;
  explicit PathSet(std::vector<std::vector<Path>> per_trip) : per_trip_(std::move(per_trip)) {}

  std::size_t trip_count() const { return per_trip_.size(); }
  const std::vector<Path>& of(std::size_t trip) const { return per_trip_.at(trip); }
  const std::vector<std::vector<Path>>& all() const { return per_trip_; }
  std::size_t path_count() const {
    std::size_t n = 0;
    for (const auto& v : per_trip_) n += v.size();
    return n;
  }

 private:
  std::vector<std::vector<Path>> per_trip_;
};

struct AccessLink {
  int stop = 0;
  double walk_minutes = 0.0;
};

/// The all-open routing network plus walking links for every trip endpoint.
struct AccessGraph {
  const TransitGraph* graph = nullptr;
  PathingConfig config;
  RoutingGraph network;  // node i = stop i, edge j = arc j weighted by rider minutes
  std::vector<std::vector<AccessLink>> access;  // per trip: origin -> stop
  std::vector<std::vector<AccessLink>> egress;  // per trip: stop -> destination
};

/// The `k` stops nearest to `p`; ties in distance go to the smaller stop id.
inline std::vector<AccessLink> nearest_stops(const TransitGraph& graph, Point p, int k, double walk_speed) {
  std::vector<std::pair<double, int>> by_distance;
  by_distance.reserve(graph.nodes().size());
  for (std::size_t i = 0; i < graph.nodes().size(); ++i)
    by_distance.emplace_back(distance(p, graph.nodes()[i].position), static_cast<int>(i));
  auto less = [&](const std::pair<double, int>& a, const std::pair<double, int>& b) {
    if (a.first != b.first) return a.first < b.first;
    return graph.nodes()[a.second].id < graph.nodes()[b.second].id;
  };
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), by_distance.size());
  std::partial_sort(by_distance.begin(), by_distance.begin() + static_cast<std::ptrdiff_t>(take), by_distance.end(),
                    less);
  std::vector<AccessLink> out;
  for (std::size_t i = 0; i < take; ++i) out.push_back({by_distance[i].second, by_distance[i].first / walk_speed});
  return out;
}

inline AccessGraph build_access_graph(const TransitGraph& graph, const TripPopulation& population,
                                      const PathingConfig& config = {}) {
  if (config.k_access < 1) throw std::invalid_argument("k_access must be at least 1");
  if (!(config.walk_speed > 0.0)) throw std::invalid_argument("walk speed must be positive");
  if (graph.nodes().empty()) throw StructuralError("graph has no stops to walk to");
  AccessGraph ag;
  ag.graph = &graph;
  ag.config = config;
  ag.network = RoutingGraph(static_cast<int>(graph.nodes().size()));
  for (std::size_t a = 0; a < graph.arcs().size(); ++a) {
    const Arc& arc = graph.arcs()[a];
    ag.network.add_edge(graph.arc_origin(static_cast<int>(a)), graph.arc_dest(static_cast<int>(a)),
                        arc.rider_minutes, arc.id);
  }
  for (const Trip& t : population.trips()) {
    ag.access.push_back(nearest_stops(graph, t.origin, config.k_access, config.walk_speed));
    ag.egress.push_back(nearest_stops(graph, t.dest, config.k_access, config.walk_speed));
  }
  return ag;
}

/// The fastest loopless paths of one trip under the all-open network, at most
/// `w`, fastest first. Returns an empty list when the destination cannot be reached.
inline std::vector<Path> enumerate_paths(const AccessGraph& ag, std::size_t trip_index, const Trip& trip,
                                         int w) {
  if (w < 1) throw std::invalid_argument("w must be at least 1");
  const TransitGraph& graph = *ag.graph;
  RoutingGraph local = ag.network;
  const int origin = local.add_node();
  const int dest = local.add_node();
  const int first_walk_edge = static_cast<int>(local.edges().size());
  const double cap = ag.config.walk_cap_minutes;
  for (const AccessLink& l : ag.access.at(trip_index))
    if (l.walk_minutes <= cap) local.add_edge(origin, l.stop, l.walk_minutes, "~walk>" + graph.nodes()[l.stop].id);
  for (const AccessLink& l : ag.egress.at(trip_index))
    if (l.walk_minutes <= cap) local.add_edge(l.stop, dest, l.walk_minutes, "~walk<" + graph.nodes()[l.stop].id);

  auto walk_of = [&](const RoutedPath& p) {
    double walk = 0.0;
    for (int e : p.edges)
      if (e >= first_walk_edge) walk += local.edges()[e].cost;
    return walk;
  };
  auto routed = k_shortest_paths(
      local, origin, dest, static_cast<std::size_t>(w), [&](const RoutedPath& p) { return walk_of(p) <= cap; },
      static_cast<std::size_t>(64 * w));

  std::vector<Path> paths;
  for (const RoutedPath& rp : routed) {
    Path p;
    p.trip_id = trip.id;
    p.rank = static_cast<int>(paths.size());
    p.id = make_path_id(trip.id, p.rank);
    for (int e : rp.edges) {
      if (e < first_walk_edge) {
        p.arcs.push_back(e);
        p.in_vehicle_minutes += graph.arcs()[e].in_motion_minutes;
      }
    }
    p.walk_minutes = walk_of(rp);
    p.total_minutes = rp.cost;
    p.transfers = count_transfers(graph, p.arcs);
    paths.push_back(std::move(p));
  }
  return paths;
}

inline PathSet enumerate_all_paths(const AccessGraph& ag, const TripPopulation& population) {
  std::vector<std::vector<Path>> per_trip(population.size());
  parallel_for(population.size(), ag.config.threads, [&](std::size_t i) {
    per_trip[i] = enumerate_paths(ag, i, population[i], ag.config.paths_per_trip);
  });
  return PathSet(std::move(per_trip));
}

/// True when every transit arc of the path is open; walking legs never block.
inline bool path_feasible(const NetworkDesign& design, const Path& path) {
  for (int a : path.arcs) {
    if (a < 0 || static_cast<std::size_t>(a) >= design.open.size())
      throw StructuralError(fmt::format("path '{}' references an arc outside the design", path.id));
    if (!design.open[static_cast<std::size_t>(a)]) return false;
  }
  return true;
}

/// Trips whose path set contains a walk-only path (no transit leg).
inline std::vector<std::size_t> walk_only_trips(const PathSet& paths) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < paths.trip_count(); ++i)
    if (std::any_of(paths.of(i).begin(), paths.of(i).end(), [](const Path& p) { return p.transit_free(); }))
      out.push_back(i);
  return out;
}

// --- paths file -------------------------------------------------------------

inline constexpr std::string_view kPathsHeader = "trip_id,path_id,rank,total_min,transfers,walk_min,arc_ids";

inline std::string write_paths(const PathSet& paths, const TransitGraph& graph, const Provenance& provenance = {}) {
  std::string out = provenance.render();
  out += kPathsHeader;
  out += '\n';
  for (const auto& trip_paths : paths.all()) {
    for (const Path& p : trip_paths) {
      std::vector<std::string> ids;
      for (int a : p.arcs) ids.push_back(graph.arcs()[a].id);
      out += fmt::format("{},{},{},{},{},{},{}\n", p.trip_id, p.id, p.rank, format_double(p.total_minutes),
                         p.transfers, format_double(p.walk_minutes), join(ids, "+"));
    }
  }
  return out;
}

/// Reads a paths file against its graph and population. Every trip of the
/// population gets an entry (possibly empty); paths of unknown trips are rejected.
inline PathSet read_paths(std::istream& in, const TransitGraph& graph, const TripPopulation& population,
                          Provenance* provenance = nullptr) {
  LineReader reader(in);
  std::string line;
  if (!reader.next(line) || trim(line) != kPathsHeader)
    throw ParseError(fmt::format("expected header '{}'", kPathsHeader), reader.line_no());
  std::vector<std::vector<Path>> per_trip(population.size());
  while (reader.next(line)) {
    const auto n = reader.line_no();
    auto f = split_csv(line, n);
    if (f.size() != 7) throw ParseError(fmt::format("expected 7 fields, got {}", f.size()), n);
    auto trip = population.find(f[0]);
    if (!trip) throw ParseError(fmt::format("unknown trip '{}'", f[0]), n);
    Path p;
    p.trip_id = f[0];
    p.id = f[1];
    p.rank = static_cast<int>(parse_int(f[2], n));
    p.total_minutes = parse_double(f[3], n);
    p.transfers = static_cast<int>(parse_int(f[4], n));
    p.walk_minutes = parse_double(f[5], n);
    if (!trim(f[6]).empty()) {
      for (const auto& id : split(f[6], '+')) {
        auto a = graph.find_arc(id);
        if (!a) throw ParseError(fmt::format("unknown arc '{}'", id), n);
        p.arcs.push_back(*a);
        p.in_vehicle_minutes += graph.arcs()[*a].in_motion_minutes;
      }
    }
    if (p.transfers != count_transfers(graph, p.arcs))
      throw ParseError(fmt::format("path '{}' transfer count disagrees with its arcs", p.id), n);
    double expected_total = p.walk_minutes;
    for (int a : p.arcs) expected_total += graph.arcs()[a].rider_minutes;
    if (std::abs(expected_total - p.total_minutes) > 1e-6 * std::max(1.0, p.total_minutes))
      throw ParseError(fmt::format("path '{}' total time disagrees with its legs", p.id), n);
    auto& list = per_trip[*trip];
    if (p.rank != static_cast<int>(list.size()))
      throw ParseError(fmt::format("path '{}' rank out of order", p.id), n);
    list.push_back(std::move(p));
  }
  if (provenance) *provenance = reader.provenance;
  return PathSet(std::move(per_trip));
}

inline PathSet load_paths(const std::filesystem::path& file, const TransitGraph& graph,
                          const TripPopulation& population, Provenance* provenance = nullptr) {
  auto in = open_input(file);
  return read_paths(in, graph, population, provenance);
}

}  // namespace tnd
