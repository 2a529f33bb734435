#pragma once

// The scenario-averaged design model in compiled form.
//
// Variables: z per free arc, f per distinct transit arc sequence, d per
// (scenario, latent trip) that adopts at least one of its paths. Core trips
// contribute a constant, latent trips contribute d (u = d substituted out),
// and fixed arcs are constants in the search but appear as z = 1 rows in the
// exported model. The objective is kept as an integer rider-scenario count.

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "tnd/demand.hpp"
#include "tnd/errors.hpp"
#include "tnd/netmodel.hpp"
#include "tnd/pathing.hpp"
#include "tnd/scenario.hpp"

namespace tnd {

struct CompiledPath {
  std::vector<int> arcs;  // graph arc indices in travel order
  std::vector<int> free;  // positions in CompiledModel::free_arcs, sorted, unique
};

/// d_r^i: latent trip r in scenario i, served when any adopted path is usable.
struct AdoptionEntry {
  int scenario = 0;
  int trip = 0;
  long long riders = 0;
  std::vector<int> paths;    // f indices of adopted transit paths
  bool walk_served = false;  // an adopted path has no transit leg
};

/// A trip that is core in at least one scenario; it needs one usable path.
struct CoreRequirement {
  int trip = 0;
  std::vector<int> scenarios;
  std::vector<int> paths;  // f indices of all its transit paths
  bool walk_served = false;
};

struct FreeArc {
  int arc = 0;
  double cost = 0.0;
  int frequency = 0;
  int out_key = 0;  // balance key of (origin, mode)
  int in_key = 0;   // balance key of (dest, mode)
  int group = -1;   // pair-mode group, -1 when the arc has no parallel
};

struct BalanceKey {
  int node = 0;
  int mode = 0;
  long long fixed_imbalance = 0;  // out - in over fixed arcs
};

struct PairGroup {
  std::vector<int> free;  // positions in free_arcs
  int fixed = 0;          // fixed arcs in the group (always open)
};

struct CompiledModel {
  const TransitGraph* graph = nullptr;  // must outlive the model
  double budget = 0.0;
  double fixed_cost = 0.0;
  std::size_t scenario_count = 0;
  std::size_t trip_count = 0;

  std::vector<FreeArc> free_arcs;            // ascending arc index
  std::vector<int> free_of_arc;              // arc index -> position, -1 for fixed
  std::vector<CompiledPath> paths;
  std::vector<std::vector<int>> trip_paths;  // per trip, per rank: f index or -1 (transit-free)
  std::vector<AdoptionEntry> entries;
  std::vector<CoreRequirement> core;
  long long core_constant = 0;               // sum over scenarios of core riders

  std::vector<BalanceKey> balance;
  std::vector<PairGroup> groups;

  std::vector<std::vector<int>> paths_of_free;   // free position -> f indices
  std::vector<std::vector<int>> entries_of_path;
  std::vector<std::vector<int>> core_of_path;

  std::size_t variable_count() const { return free_arcs.size() + paths.size() + entries.size(); }

  /// Objective value (riders per scenario) of an integer rider-scenario count.
  double to_objective(long long count) const {
    return scenario_count == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(scenario_count);
  }

  /// Rider-scenario count reachable with every arc open.
  long long bound_count() const {
    long long total = core_constant;
    for (const auto& e : entries) total += e.riders;
    return total;
  }

  /// Budget left for free arcs once fixed arcs are paid.
  double free_budget() const { return budget - fixed_cost; }

  bool within_free_budget(double free_cost) const { return within_budget(fixed_cost + free_cost, budget); }

  /// Design with fixed arcs open and the given free positions open.
  NetworkDesign design_from(const std::vector<std::uint8_t>& free_open) const {
    auto d = NetworkDesign::fixed_only(*graph);
    for (std::size_t j = 0; j < free_arcs.size(); ++j)
      if (free_open[j]) d.open[static_cast<std::size_t>(free_arcs[j].arc)] = 1;
    return d;
  }

  std::vector<std::uint8_t> free_open_of(const NetworkDesign& design) const {
    require_same_shape(design, *graph);
    std::vector<std::uint8_t> out(free_arcs.size());
    for (std::size_t j = 0; j < free_arcs.size(); ++j) out[j] = design.open[static_cast<std::size_t>(free_arcs[j].arc)];
    return out;
  }
};

inline CompiledModel compile(const TransitGraph& graph, const TripPopulation& population, const PathSet& pathset,
                             const ScenarioBundle& bundle, double budget) {
  if (pathset.trip_count() != population.size()) throw StructuralError("path set does not match the population");
  if (auto bad = pre_infeasibility(bundle, pathset); !bad.empty())
    throw InfeasibleError(fmt::format("trip '{}' is core in scenario {} but has no candidate path",
                                      population[bad.front().second].id, bad.front().first));
  CompiledModel m;
  m.graph = &graph;
  m.budget = budget;
  m.scenario_count = bundle.size();
  m.trip_count = population.size();

  const auto& arcs = graph.arcs();
  m.free_of_arc.assign(arcs.size(), -1);
  std::map<std::pair<int, int>, int> key_of;
  auto balance_key = [&](int node, int mode) {
    auto [it, inserted] = key_of.try_emplace({node, mode}, static_cast<int>(m.balance.size()));
    if (inserted) m.balance.push_back({node, mode, 0});
    return it->second;
  };
  for (std::size_t a = 0; a < arcs.size(); ++a) {
    const int ai = static_cast<int>(a);
    const int out_key = balance_key(graph.arc_origin(ai), graph.arc_mode(ai));
    const int in_key = balance_key(graph.arc_dest(ai), graph.arc_mode(ai));
    if (arcs[a].is_fixed) {
      m.fixed_cost += arcs[a].cost;
      m.balance[static_cast<std::size_t>(out_key)].fixed_imbalance += arcs[a].frequency;
      m.balance[static_cast<std::size_t>(in_key)].fixed_imbalance -= arcs[a].frequency;
      continue;
    }
    m.free_of_arc[a] = static_cast<int>(m.free_arcs.size());
    m.free_arcs.push_back({ai, arcs[a].cost, arcs[a].frequency, out_key, in_key, -1});
  }
  for (const auto& [key, group] : graph.index().pair_groups) {
    if (group.size() < 2) continue;
    PairGroup g;
    for (int a : group) {
      if (arcs[static_cast<std::size_t>(a)].is_fixed) ++g.fixed;
      else g.free.push_back(m.free_of_arc[static_cast<std::size_t>(a)]);
    }
    for (int j : g.free) m.free_arcs[static_cast<std::size_t>(j)].group = static_cast<int>(m.groups.size());
    m.groups.push_back(std::move(g));
  }

  // One f per distinct arc sequence.
  std::map<std::vector<int>, int> path_of_sequence;
  m.trip_paths.resize(population.size());
  for (std::size_t r = 0; r < population.size(); ++r) {
    for (const Path& p : pathset.of(r)) {
      if (p.arcs.empty()) {
        m.trip_paths[r].push_back(-1);
        continue;
      }
      auto [it, inserted] = path_of_sequence.try_emplace(p.arcs, static_cast<int>(m.paths.size()));
      if (inserted) {
        CompiledPath cp;
        cp.arcs = p.arcs;
        for (int a : p.arcs)
          if (int j = m.free_of_arc[static_cast<std::size_t>(a)]; j >= 0) cp.free.push_back(j);
        std::sort(cp.free.begin(), cp.free.end());
        cp.free.erase(std::unique(cp.free.begin(), cp.free.end()), cp.free.end());
        m.paths.push_back(std::move(cp));
      }
      m.trip_paths[r].push_back(it->second);
    }
  }

  std::vector<int> core_row_of(population.size(), -1);
  for (std::size_t i = 0; i < bundle.size(); ++i) {
    const Scenario& s = bundle.scenarios[i];
    for (std::size_t r = 0; r < population.size(); ++r) {
      const auto& tp = m.trip_paths[r];
      if (s.is_core(r)) {
        m.core_constant += population[r].riders;
        if (core_row_of[r] < 0) {
          core_row_of[r] = static_cast<int>(m.core.size());
          CoreRequirement c;
          c.trip = static_cast<int>(r);
          for (int f : tp) {
            if (f < 0) c.walk_served = true;
            else if (std::find(c.paths.begin(), c.paths.end(), f) == c.paths.end()) c.paths.push_back(f);
          }
          m.core.push_back(std::move(c));
        }
        m.core[static_cast<std::size_t>(core_row_of[r])].scenarios.push_back(static_cast<int>(i));
        continue;
      }
      if (s.prunable(r)) continue;
      AdoptionEntry e;
      e.scenario = static_cast<int>(i);
      e.trip = static_cast<int>(r);
      e.riders = population[r].riders;
      for (std::size_t k = 0; k < tp.size(); ++k) {
        if (!s.adopt[r][k]) continue;
        if (tp[k] < 0) e.walk_served = true;
        else if (std::find(e.paths.begin(), e.paths.end(), tp[k]) == e.paths.end()) e.paths.push_back(tp[k]);
      }
      m.entries.push_back(std::move(e));
    }
  }

  m.paths_of_free.resize(m.free_arcs.size());
  m.entries_of_path.resize(m.paths.size());
  m.core_of_path.resize(m.paths.size());
  for (std::size_t p = 0; p < m.paths.size(); ++p)
    for (int j : m.paths[p].free) m.paths_of_free[static_cast<std::size_t>(j)].push_back(static_cast<int>(p));
  for (std::size_t e = 0; e < m.entries.size(); ++e)
    for (int p : m.entries[e].paths) m.entries_of_path[static_cast<std::size_t>(p)].push_back(static_cast<int>(e));
  for (std::size_t c = 0; c < m.core.size(); ++c)
    for (int p : m.core[c].paths) m.core_of_path[static_cast<std::size_t>(p)].push_back(static_cast<int>(c));
  return m;
}

/// Incrementally maintained evaluation of one assignment of the free arcs.
class DesignState {
 public:
  explicit DesignState(const CompiledModel& model) : m_(&model) {
    open_.assign(model.free_arcs.size(), 0);
    closed_.resize(model.paths.size());
    for (std::size_t p = 0; p < model.paths.size(); ++p) closed_[p] = static_cast<int>(model.paths[p].free.size());
    alive_.assign(model.entries.size(), 0);
    served_ = model.core_constant;
    for (std::size_t e = 0; e < model.entries.size(); ++e) {
      const auto& entry = model.entries[e];
      alive_[e] = entry.walk_served ? 1 : 0;
      for (int p : entry.paths)
        if (closed_[static_cast<std::size_t>(p)] == 0) ++alive_[e];
      if (alive_[e] > 0) served_ += entry.riders;
    }
    core_alive_.assign(model.core.size(), 0);
    for (std::size_t c = 0; c < model.core.size(); ++c) {
      const auto& row = model.core[c];
      core_alive_[c] = row.walk_served ? 1 : 0;
      for (int p : row.paths)
        if (closed_[static_cast<std::size_t>(p)] == 0) ++core_alive_[c];
      if (core_alive_[c] == 0) ++dead_core_;
    }
    imbalance_.resize(model.balance.size());
    for (std::size_t k = 0; k < model.balance.size(); ++k) {
      imbalance_[k] = model.balance[k].fixed_imbalance;
      if (imbalance_[k] != 0) ++unbalanced_;
    }
    group_open_.resize(model.groups.size());
    for (std::size_t g = 0; g < model.groups.size(); ++g) {
      group_open_[g] = model.groups[g].fixed;
      if (group_open_[g] > 1) ++crowded_;
    }
  }

  DesignState(const CompiledModel& model, const std::vector<std::uint8_t>& free_open) : DesignState(model) {
    for (std::size_t j = 0; j < free_open.size(); ++j)
      if (free_open[j]) open(static_cast<int>(j));
  }

  const CompiledModel& model() const { return *m_; }
  bool is_open(int j) const { return open_[static_cast<std::size_t>(j)] != 0; }
  const std::vector<std::uint8_t>& free_open() const { return open_; }
  long long served() const { return served_; }
  double free_cost() const { return cost_; }
  int dead_core_rows() const { return dead_core_; }
  bool core_row_alive(int c) const { return core_alive_[static_cast<std::size_t>(c)] > 0; }
  bool entry_alive(int e) const { return alive_[static_cast<std::size_t>(e)] > 0; }
  bool path_usable(int p) const { return closed_[static_cast<std::size_t>(p)] == 0; }
  int closed_arcs_of(int p) const { return closed_[static_cast<std::size_t>(p)]; }
  long long imbalance(int key) const { return imbalance_[static_cast<std::size_t>(key)]; }
  bool balanced() const { return unbalanced_ == 0; }
  bool pair_mode_ok() const { return crowded_ == 0; }
  bool can_open(int j) const {
    const FreeArc& a = m_->free_arcs[static_cast<std::size_t>(j)];
    return !is_open(j) && (a.group < 0 || group_open_[static_cast<std::size_t>(a.group)] == 0);
  }
  bool feasible() const {
    return dead_core_ == 0 && unbalanced_ == 0 && crowded_ == 0 && m_->within_free_budget(cost_);
  }

  void open(int j) {
    auto& flag = open_[static_cast<std::size_t>(j)];
    if (flag) return;
    flag = 1;
    const FreeArc& a = m_->free_arcs[static_cast<std::size_t>(j)];
    cost_ += a.cost;
    shift_balance(a.out_key, a.frequency);
    shift_balance(a.in_key, -a.frequency);
    if (a.group >= 0 && ++group_open_[static_cast<std::size_t>(a.group)] == 2) ++crowded_;
    for (int p : m_->paths_of_free[static_cast<std::size_t>(j)])
      if (--closed_[static_cast<std::size_t>(p)] == 0) path_changed(p, +1);
  }

  void close(int j) {
    auto& flag = open_[static_cast<std::size_t>(j)];
    if (!flag) return;
    flag = 0;
    const FreeArc& a = m_->free_arcs[static_cast<std::size_t>(j)];
    cost_ -= a.cost;
    shift_balance(a.out_key, -a.frequency);
    shift_balance(a.in_key, a.frequency);
    if (a.group >= 0 && group_open_[static_cast<std::size_t>(a.group)]-- == 2) --crowded_;
    for (int p : m_->paths_of_free[static_cast<std::size_t>(j)])
      if (closed_[static_cast<std::size_t>(p)]++ == 0) path_changed(p, -1);
  }

  std::vector<int> open_positions() const {
    std::vector<int> out;
    for (std::size_t j = 0; j < open_.size(); ++j)
      if (open_[j]) out.push_back(static_cast<int>(j));
    return out;
  }

 private:
  void shift_balance(int key, long long delta) {
    auto& v = imbalance_[static_cast<std::size_t>(key)];
    const bool was = v != 0;
    v += delta;
    const bool now = v != 0;
    if (was != now) unbalanced_ += now ? 1 : -1;
  }

  void path_changed(int p, int delta) {
    for (int e : m_->entries_of_path[static_cast<std::size_t>(p)]) {
      auto& a = alive_[static_cast<std::size_t>(e)];
      const bool was = a > 0;
      a += delta;
      if (was != (a > 0)) served_ += (a > 0 ? 1 : -1) * m_->entries[static_cast<std::size_t>(e)].riders;
    }
    for (int c : m_->core_of_path[static_cast<std::size_t>(p)]) {
      auto& a = core_alive_[static_cast<std::size_t>(c)];
      const bool was = a > 0;
      a += delta;
      if (was != (a > 0)) dead_core_ += a > 0 ? -1 : 1;
    }
  }

  const CompiledModel* m_;
  std::vector<std::uint8_t> open_;
  std::vector<int> closed_;
  std::vector<int> alive_;
  std::vector<int> core_alive_;
  std::vector<long long> imbalance_;
  std::vector<int> group_open_;
  long long served_ = 0;
  double cost_ = 0.0;
  int dead_core_ = 0;
  int unbalanced_ = 0;
  int crowded_ = 0;
};

/// True when `a` precedes `b` as ascending sequences of open positions.
inline bool lex_less(const std::vector<int>& a, const std::vector<int>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

enum class SolveStatus { optimal, feasible, infeasible, timeout };

inline std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::feasible: return "feasible";
    case SolveStatus::infeasible: return "infeasible";
    default: return "timeout";
  }
}

struct SolveStats {
  long long nodes = 0;
  long long iterations = 0;
  long long construction_count = 0;  // heuristic objective count after construction
  long long improvements = 0;
};

struct SolveResult {
  SolveStatus status = SolveStatus::infeasible;
  bool has_design = false;
  NetworkDesign design;
  long long objective_count = 0;
  double objective = 0.0;
  double bound = 0.0;
  double wall_seconds = 0.0;
  SolveStats stats;
  std::vector<std::pair<int, int>> witnesses;  // (scenario, trip) core pairs that cannot be served
  std::string message;
};

/// (scenario, trip) pairs of core requirements that no budget-feasible single path can serve.
inline std::vector<std::pair<int, int>> core_witnesses(const CompiledModel& m) {
  std::vector<std::pair<int, int>> out;
  const double room = m.free_budget();
  for (const auto& row : m.core) {
    if (row.walk_served) continue;
    bool servable = false;
    for (int p : row.paths) {
      double cost = 0.0;
      bool crowded = false;
      std::map<int, int> per_group;
      for (int j : m.paths[static_cast<std::size_t>(p)].free) {
        const FreeArc& a = m.free_arcs[static_cast<std::size_t>(j)];
        cost += a.cost;
        if (a.group >= 0 && (++per_group[a.group] + m.groups[static_cast<std::size_t>(a.group)].fixed) > 1)
          crowded = true;
      }
      if (!crowded && within_budget(cost, room)) {
        servable = true;
        break;
      }
    }
    if (!servable)
      for (int i : row.scenarios) out.emplace_back(i, row.trip);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace tnd
