#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "support.hpp"

using namespace tnd;
using namespace tnd::testing;

namespace {

struct Simple {
  std::vector<int> edges;
  double cost = 0.0;
  std::vector<std::string> keys;
};

// Every simple source->target path by depth-first search.
void dfs(const RoutingGraph& g, int at, int target, std::vector<char>& seen, Simple& cur, std::vector<Simple>& out) {
  if (at == target) {
    out.push_back(cur);
    return;
  }
  for (int e : g.out_edges(at)) {
    const auto& edge = g.edges()[e];
    if (seen[edge.to]) continue;
    seen[edge.to] = 1;
    cur.edges.push_back(e);
    cur.keys.push_back(edge.key);
    cur.cost += edge.cost;
    dfs(g, edge.to, target, seen, cur, out);
    cur.cost -= edge.cost;
    cur.keys.pop_back();
    cur.edges.pop_back();
    seen[edge.to] = 0;
  }
}

std::vector<Simple> all_simple(const RoutingGraph& g, int s, int t) {
  std::vector<Simple> out;
  std::vector<char> seen(static_cast<std::size_t>(g.node_count()), 0);
  seen[s] = 1;
  Simple cur;
  dfs(g, s, t, seen, cur, out);
  std::sort(out.begin(), out.end(), [](const Simple& a, const Simple& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.keys < b.keys;
  });
  return out;
}

RoutingGraph random_graph(std::mt19937_64& gen, int nodes, int edges) {
  RoutingGraph g(nodes);
  for (int e = 0; e < edges; ++e) {
    int a = static_cast<int>(gen() % nodes), b = static_cast<int>(gen() % nodes);
    if (a == b) continue;
    // Small integer weights so equal-cost ties are common.
    g.add_edge(a, b, static_cast<double>(1 + gen() % 4), fmt::format("e{:03}", e));
  }
  return g;
}

// Trip-level oracle: walk to one of the k nearest stops, ride a stop-simple
// sequence of arcs, walk from one of the k nearest stops to the destination.
std::vector<double> oracle_trip_costs(const TransitGraph& g, const Trip& t, const PathingConfig& pc) {
  auto nearest = [&](Point p) {
    std::vector<std::pair<double, int>> all;
    for (std::size_t i = 0; i < g.nodes().size(); ++i)
      all.push_back({distance(p, g.nodes()[i].position) / pc.walk_speed, static_cast<int>(i)});
    std::sort(all.begin(), all.end());
    all.resize(std::min<std::size_t>(all.size(), static_cast<std::size_t>(pc.k_access)));
    return all;
  };
  auto access = nearest(t.origin), egress = nearest(t.dest);
  std::vector<double> costs;
  std::function<void(int, double, double, std::vector<char>&)> go = [&](int at, double walk, double ride,
                                                                      std::vector<char>& seen) {
    for (auto [w, s] : egress)
      if (s == at && w <= pc.walk_cap_minutes && walk + w <= pc.walk_cap_minutes) costs.push_back(walk + w + ride);
    for (std::size_t a = 0; a < g.arcs().size(); ++a) {
      if (g.arc_origin(static_cast<int>(a)) != at) continue;
      int to = g.arc_dest(static_cast<int>(a));
      if (seen[to]) continue;
      seen[to] = 1;
      go(to, walk, ride + g.arcs()[a].rider_minutes, seen);
      seen[to] = 0;
    }
  };
  for (auto [w, s] : access) {
    if (w > pc.walk_cap_minutes) continue;
    std::vector<char> seen(g.nodes().size(), 0);
    seen[s] = 1;
    go(s, w, 0.0, seen);
  }
  std::sort(costs.begin(), costs.end());
  return costs;
}

}  // namespace

TEST(Pathing, DefaultsMatchContract) {
  PathingConfig pc;
  EXPECT_EQ(pc.paths_per_trip, 4);
  EXPECT_EQ(pc.k_access, 5);
}

TEST(Ksp, MatchesBruteForceOnSmallGraphs) {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 7);
    auto g = random_graph(gen, n, static_cast<int>(gen() % 20));
    const int s = 0, t = n - 1;
    const std::size_t k = 1 + gen() % 6;
    auto oracle = all_simple(g, s, t);
    auto got = k_shortest_paths(g, s, t, k);
    ASSERT_EQ(got.size(), std::min(k, oracle.size())) << "trial " << trial;
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].cost, oracle[i].cost);
      EXPECT_EQ(got[i].edges, oracle[i].edges) << "trial " << trial << " rank " << i;
    }
  }
}

TEST(Ksp, EnumeratorIsExhaustiveAndOrdered) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 100; ++trial) {
    auto g = random_graph(gen, 6, 14);
    auto oracle = all_simple(g, 0, 5);
    YenEnumerator yen(g, 0, 5);
    std::vector<RoutedPath> got;
    while (auto p = yen.next()) got.push_back(*p);
    ASSERT_EQ(got.size(), oracle.size());
    for (std::size_t i = 1; i < got.size(); ++i) EXPECT_LE(got[i - 1].cost, got[i].cost);
    std::set<std::vector<int>> a, b;
    for (const auto& p : got) a.insert(p.edges);
    for (const auto& p : oracle) b.insert(p.edges);
    EXPECT_EQ(a, b);
  }
}

TEST(Ksp, AcceptFilterAndSourceEqualsTarget) {
  RoutingGraph g(3);
  g.add_edge(0, 1, 1, "a");
  g.add_edge(1, 2, 1, "b");
  g.add_edge(0, 2, 5, "c");
  EXPECT_TRUE(k_shortest_paths(g, 1, 1, 3).empty());
  auto only_direct = k_shortest_paths(g, 0, 2, 3, [](const RoutedPath& p) { return p.edges.size() == 1; });
  ASSERT_EQ(only_direct.size(), 1u);
  EXPECT_EQ(only_direct[0].cost, 5.0);
}

TEST(Pathing, TripPathsMatchOracle) {
  for (int trial = 0; trial < 40; ++trial) {
    auto inst = random_instance(500 + trial, 12, 1, 6);
    PathingConfig pc;
    pc.walk_cap_minutes = 12.0;
    for (std::size_t r = 0; r < inst.population.size(); ++r) {
      const auto& got = inst.paths.of(r);
      auto oracle = oracle_trip_costs(inst.graph, inst.population[r], pc);
      ASSERT_EQ(got.size(), std::min<std::size_t>(4, oracle.size())) << "trial " << trial << " trip " << r;
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_NEAR(got[i].total_minutes, oracle[i], 1e-9);
        EXPECT_EQ(got[i].rank, static_cast<int>(i));
        EXPECT_EQ(got[i].id, fmt::format("{}#{}", inst.population[r].id, i));
        EXPECT_LE(got[i].walk_minutes, pc.walk_cap_minutes + 1e-12);
        double ride = 0.0, motion = 0.0;
        for (int a : got[i].arcs) {
          ride += inst.graph.arcs()[a].rider_minutes;
          motion += inst.graph.arcs()[a].in_motion_minutes;
        }
        EXPECT_NEAR(got[i].total_minutes, ride + got[i].walk_minutes, 1e-9);
        EXPECT_NEAR(got[i].in_vehicle_minutes, motion, 1e-9);
      }
    }
  }
}

TEST(Pathing, TransfersCountModeChanges) {
  TransitGraph g({stop("a", 0, 0, true), stop("b", 500, 0, true), stop("c", 1000, 0), stop("d", 1500, 0)},
                 {rail("ab", "a", "b", 2), rail("ba", "b", "a", 2), bus("bc", "b", "c", 3, 1), bus("cd", "c", "d", 3, 1)});
  EXPECT_EQ(count_transfers(g, {0, 2, 3}), 1);
  EXPECT_EQ(count_transfers(g, {2, 3}), 0);
  EXPECT_EQ(count_transfers(g, {}), 0);
}

TEST(Pathing, NearestStopsTieBreakById) {
  TransitGraph g({stop("z", 100, 0), stop("a", -100, 0), stop("m", 0, 300)}, {});
  auto near = nearest_stops(g, {0, 0}, 2, 80.0);
  ASSERT_EQ(near.size(), 2u);
  EXPECT_EQ(g.nodes()[near[0].stop].id, "a");
  EXPECT_EQ(g.nodes()[near[1].stop].id, "z");
  EXPECT_DOUBLE_EQ(near[0].walk_minutes, 1.25);
}

TEST(Pathing, PathFeasibleNeedsEveryArc) {
  auto inst = random_instance(9);
  auto all = NetworkDesign::all_open(inst.graph);
  auto none = NetworkDesign::all_closed(inst.graph);
  for (const auto& list : inst.paths.all())
    for (const Path& p : list) {
      EXPECT_TRUE(path_feasible(all, p));
      EXPECT_EQ(path_feasible(none, p), p.transit_free());
    }
}

TEST(Pathing, FileRoundTripAndValidation) {
  auto inst = random_instance(12);
  auto text = write_paths(inst.paths, inst.graph);
  std::istringstream in(text);
  auto back = read_paths(in, inst.graph, inst.population);
  EXPECT_EQ(write_paths(back, inst.graph), text);

  std::istringstream bad("trip_id,path_id,rank,total_min,transfers,walk_min,arc_ids\nnobody,nobody#0,0,1,0,1,\n");
  EXPECT_THROW(read_paths(bad, inst.graph, inst.population), ParseError);
  const auto& t0 = inst.population[0].id;
  std::istringstream wrong_total(fmt::format(
      "trip_id,path_id,rank,total_min,transfers,walk_min,arc_ids\n{0},{0}#0,0,99,0,1,{1}\n", t0, inst.graph.arcs()[0].id));
  EXPECT_THROW(read_paths(wrong_total, inst.graph, inst.population), ParseError);
}

TEST(Pathing, ThreadCountDoesNotChangePaths) {
  auto inst = random_instance(44, 12, 1, 30);
  PathingConfig pc;
  pc.walk_cap_minutes = 12.0;
  pc.threads = 4;
  auto par = enumerate_all_paths(build_access_graph(inst.graph, inst.population, pc), inst.population);
  EXPECT_EQ(write_paths(par, inst.graph), write_paths(inst.paths, inst.graph));
}
