#pragma once

// Shared fixtures for the unit tests: compact graph builders, a random small
// instance generator, and brute-force oracles that do not use the library's
// compiled model.

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "tnd/choice.hpp"
#include "tnd/demand.hpp"
#include "tnd/netmodel.hpp"
#include "tnd/pathing.hpp"
#include "tnd/scenario.hpp"

namespace tnd::testing {

inline Node stop(const std::string& id, double x, double y, bool rail = false) { return {id, {x, y}, rail}; }

inline Arc bus(const std::string& id, const std::string& o, const std::string& d, double minutes, double cost,
               int freq = 6) {
  return {id, o, d, kBus, freq, minutes, minutes + 5.0, cost, false};
}

inline Arc rail(const std::string& id, const std::string& o, const std::string& d, double minutes) {
  return {id, o, d, kRail, 6, minutes, minutes + 5.0, 0.0, true};
}

inline ContextSchema plain_schema() { return {{{"x", FeatureKind::numeric}}}; }

inline Trip trip(const std::string& id, Point o, Point d, int riders = 1, double x = 0.0) {
  Trip t;
  t.id = id;
  t.origin = o;
  t.dest = d;
  t.riders = riders;
  t.context.values = {x};
  return t;
}

/// A small random instance: stops on a jittered line-ish layout, bus arcs in
/// both directions for random stop pairs (each direction a separate free arc),
/// optionally a fixed two-way rail link, and trips between random points.
struct RandomInstance {
  TransitGraph graph;
  TripPopulation population;
  PathSet paths;
  ScenarioBundle bundle;
  double budget = 0.0;
};

inline RandomInstance random_instance(std::uint64_t seed, int max_free_arcs = 12, int max_scenarios = 5,
                                      int trips = 6) {
  std::mt19937_64 gen(seed);
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); };
  auto pick = [&](int n) { return static_cast<int>(gen() % static_cast<std::uint64_t>(n)); };

  const int n = 3 + pick(3);
  std::vector<Node> nodes;
  for (int i = 0; i < n; ++i) nodes.push_back(stop(fmt::format("n{}", i), i * 800.0 + uni(-100, 100), uni(-400, 400)));
  std::vector<Arc> arcs;
  std::set<std::pair<int, int>> used;
  const int pairs = std::max(1, max_free_arcs / 2);
  for (int k = 0; k < pairs * 3 && static_cast<int>(arcs.size()) + 2 <= max_free_arcs; ++k) {
    int a = pick(n), b = pick(n);
    if (a == b || used.count({std::min(a, b), std::max(a, b)})) continue;
    used.insert({std::min(a, b), std::max(a, b)});
    const double minutes = std::round(uni(2.0, 9.0) * 100) / 100;
    const double cost = std::round(uni(5.0, 40.0));
    arcs.push_back(bus(fmt::format("b{}", arcs.size()), nodes[a].id, nodes[b].id, minutes, cost));
    arcs.push_back(bus(fmt::format("b{}", arcs.size()), nodes[b].id, nodes[a].id, minutes, cost));
  }
  // An extra parallel arc at a different frequency exercises the pair-mode rule.
  if (!arcs.empty() && static_cast<int>(arcs.size()) < max_free_arcs && pick(2) == 0) {
    Arc extra = arcs[0];
    extra.id = "b_alt";
    extra.frequency = 12;
    extra.cost *= 2;
    arcs.push_back(extra);
  }
  if (pick(2) == 0) {
    nodes[0].is_rail_station = nodes[n - 1].is_rail_station = true;
    arcs.push_back(rail("r0", nodes[0].id, nodes[n - 1].id, 6.0));
    arcs.push_back(rail("r1", nodes[n - 1].id, nodes[0].id, 6.0));
  }
  RandomInstance inst;
  inst.graph = TransitGraph(nodes, arcs);

  std::vector<Trip> ts;
  const double span = (n - 1) * 800.0;
  for (int r = 0; r < trips; ++r)
    ts.push_back(trip(fmt::format("t{}", r), {uni(-200, span + 200), uni(-300, 300)},
                      {uni(-200, span + 200), uni(-300, 300)}, 1 + pick(2), uni(0, 1)));
  inst.population = TripPopulation(plain_schema(), ts);

  PathingConfig pc;
  pc.walk_cap_minutes = 12.0;
  auto ag = build_access_graph(inst.graph, inst.population, pc);
  inst.paths = enumerate_all_paths(ag, inst.population);

  TableModel core, adopt;
  for (std::size_t r = 0; r < inst.population.size(); ++r) {
    const bool has_transit_path = std::any_of(inst.paths.of(r).begin(), inst.paths.of(r).end(),
                                              [](const Path& p) { return !p.arcs.empty(); });
    core.probabilities[inst.population[r].id] = has_transit_path && pick(4) == 0 ? uni(0.1, 0.6) : 0.0;
    for (const Path& p : inst.paths.of(r)) adopt.probabilities[p.id] = uni(0.0, 0.8);
  }
  const int scenarios = 1 + pick(max_scenarios);
  inst.bundle = sample_scenarios(inst.population, inst.paths, {ModelRole::core, core}, {ModelRole::adopt, adopt},
                                 static_cast<std::size_t>(scenarios), seed);
  double total = 0.0;
  for (const Arc& a : arcs) total += a.cost;
  inst.budget = std::round(total * uni(0.2, 1.1));
  return inst;
}

// --- brute-force oracles -----------------------------------------------------

/// Design feasibility from first principles: budget, fixed arcs, per-(node, mode)
/// flow balance, at most one open arc per (origin, dest, mode).
inline bool oracle_feasible(const TransitGraph& g, const std::vector<std::uint8_t>& open, double budget) {
  double cost = 0.0;
  std::map<std::pair<std::string, std::string>, long long> flow;
  std::map<std::tuple<std::string, std::string, std::string>, int> per_pair;
  for (std::size_t a = 0; a < g.arcs().size(); ++a) {
    const Arc& arc = g.arcs()[a];
    if (arc.is_fixed && !open[a]) return false;
    if (!open[a]) continue;
    cost += arc.cost;
    flow[{arc.origin, arc.mode}] += arc.frequency;
    flow[{arc.dest, arc.mode}] -= arc.frequency;
    if (++per_pair[{arc.origin, arc.dest, arc.mode}] > 1) return false;
  }
  if (cost > budget + 1e-9 * std::max(1.0, budget)) return false;
  for (const auto& [k, v] : flow)
    if (v != 0) return false;
  return true;
}

inline bool oracle_path_open(const Path& p, const std::vector<std::uint8_t>& open) {
  for (int a : p.arcs)
    if (!open[static_cast<std::size_t>(a)]) return false;
  return true;
}

/// Sum over scenarios of riders using transit; -1 when some core trip has no open path.
inline long long oracle_count(const TripPopulation& pop, const PathSet& paths, const ScenarioBundle& bundle,
                              const std::vector<std::uint8_t>& open) {
  long long total = 0;
  for (const Scenario& s : bundle.scenarios) {
    for (std::size_t r = 0; r < pop.size(); ++r) {
      const auto& ps = paths.of(r);
      if (s.core[r]) {
        bool served = false;
        for (const Path& p : ps) served = served || oracle_path_open(p, open);
        if (!served) return -1;
        total += pop[r].riders;
        continue;
      }
      bool uses = false;
      for (std::size_t k = 0; k < ps.size(); ++k) uses = uses || (s.adopt[r][k] && oracle_path_open(ps[k], open));
      if (uses) total += pop[r].riders;
    }
  }
  return total;
}

struct BruteForce {
  long long best = -1;  // -1: no feasible design
  std::vector<std::vector<std::uint8_t>> optimal;
};

inline BruteForce brute_force(const RandomInstance& inst) {
  const auto& arcs = inst.graph.arcs();
  std::vector<std::size_t> free;
  for (std::size_t a = 0; a < arcs.size(); ++a)
    if (!arcs[a].is_fixed) free.push_back(a);
  BruteForce out;
  for (std::uint64_t mask = 0; mask < (1ULL << free.size()); ++mask) {
    std::vector<std::uint8_t> open(arcs.size(), 0);
    for (std::size_t a = 0; a < arcs.size(); ++a) open[a] = arcs[a].is_fixed ? 1 : 0;
    for (std::size_t k = 0; k < free.size(); ++k)
      if (mask >> k & 1) open[free[k]] = 1;
    if (!oracle_feasible(inst.graph, open, inst.budget)) continue;
    const long long c = oracle_count(inst.population, inst.paths, inst.bundle, open);
    if (c < 0) continue;
    if (c > out.best) {
      out.best = c;
      out.optimal.clear();
    }
    if (c == out.best) out.optimal.push_back(open);
  }
  return out;
}

}  // namespace tnd::testing
