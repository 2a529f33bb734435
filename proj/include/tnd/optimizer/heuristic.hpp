#pragma once

// Greedy construction plus large-neighborhood search.
//
// A move ("unit") opens the closed arcs of one candidate path and then
// restores flow balance by opening cheapest chains of openable same-mode arcs
// from deficit nodes to surplus nodes; with equal frequencies the result is a
// set of cycles. Units never overlap, so removing whole units keeps balance.
//
// Construction first serves every core requirement, then adds units by
// riders gained per unit cost. Each LNS iteration removes 1-3 random units and
// enumerates all subsets of a small candidate pool on the freed budget. The
// iteration count is fixed so results depend only on the seed; the time limit
// is a safety cap.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <unordered_map>
#include <vector>

#include "tnd/optimizer/model.hpp"
#include "tnd/parallel.hpp"
#include "tnd/rng.hpp"

namespace tnd {

struct HeuristicOptions {
  double time_limit_s = 60.0;
  std::uint64_t seed = 1;
  int iterations = 200;
  int portfolio_size = 1;
  int pool_size = 8;
  int sample_size = 40;  // candidate paths scored per iteration when filling the pool
  unsigned threads = 1;
};

namespace detail {

struct Unit {
  int path = -1;
  std::vector<int> arcs;  // free positions opened by the unit
  double cost = 0.0;
  long long gain = 0;
  int revived = 0;  // core requirements that become served
};

class LocalSearch {
 public:
  LocalSearch(const CompiledModel& m, const HeuristicOptions& options, std::uint64_t seed)
      : m_(m), options_(options), state_(m), rng_(seed, Stream::search), start_(std::chrono::steady_clock::now()) {
    const TransitGraph& g = *m.graph;
    modes_ = g.modes().size();
    key_of_.assign(g.nodes().size() * modes_, -1);
    for (std::size_t k = 0; k < m.balance.size(); ++k)
      key_of_[static_cast<std::size_t>(m.balance[k].node) * modes_ + static_cast<std::size_t>(m.balance[k].mode)] =
          static_cast<int>(k);
    dist_.assign(g.nodes().size(), std::numeric_limits<double>::infinity());
    via_.assign(g.nodes().size(), -1);
  }

  SolveResult run() {
    SolveResult result;
    result.bound = m_.to_objective(m_.bound_count());
    if (!state_.pair_mode_ok() || !m_.within_free_budget(0.0) || !initial_balance()) {
      result.status = SolveStatus::infeasible;
      result.message = "fixed arcs alone violate budget, pair-mode or flow balance";
      return finish(result);
    }
    if (!serve_core()) {
      result.status = SolveStatus::infeasible;
      result.witnesses = core_witnesses(m_);
      if (result.witnesses.empty())
        for (std::size_t c = 0; c < m_.core.size(); ++c)
          if (!state_.core_row_alive(static_cast<int>(c)))
            for (int i : m_.core[c].scenarios) result.witnesses.emplace_back(i, m_.core[c].trip);
      result.message = "could not serve every core requirement within the budget";
      return finish(result);
    }
    greedy_fill();
    result.stats.construction_count = state_.served();
    remember_if_better();
    for (int it = 0; it < options_.iterations && !out_of_time(); ++it) {
      ++result.stats.iterations;
      if (lns_step()) ++result.stats.improvements;
      remember_if_better();
    }
    result.status = SolveStatus::feasible;
    result.has_design = true;
    result.design = m_.design_from(best_open_);
    result.objective_count = best_count_;
    result.objective = m_.to_objective(best_count_);
    return finish(result);
  }

 private:
  SolveResult& finish(SolveResult& r) {
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return r;
  }

  bool out_of_time() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count() > options_.time_limit_s;
  }

  int key(int node, int mode) const {
    return key_of_[static_cast<std::size_t>(node) * modes_ + static_cast<std::size_t>(mode)];
  }

  double room() const { return m_.free_budget() - state_.free_cost(); }

  void remember_if_better() {
    const long long count = state_.served();
    auto open = state_.open_positions();
    if (has_best_ && (count < best_count_ || (count == best_count_ && !lex_less(open, best_positions_)))) return;
    has_best_ = true;
    best_count_ = count;
    best_open_ = state_.free_open();
    best_positions_ = std::move(open);
  }

  /// Opens a cheapest chain of openable arcs from a deficit node into `target`
  /// (a node whose outflow exceeds its inflow). Appends opened positions.
  bool route_into(int target, int mode, std::vector<int>& opened) {
    const TransitGraph& g = *m_.graph;
    std::vector<int> touched;
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist_[static_cast<std::size_t>(target)] = 0.0;
    touched.push_back(target);
    heap.emplace(0.0, target);
    int source = -1;
    while (!heap.empty()) {
      auto [d, v] = heap.top();
      heap.pop();
      if (d > dist_[static_cast<std::size_t>(v)]) continue;
      if (v != target) {
        const int k = key(v, mode);
        if (k >= 0 && state_.imbalance(k) < 0) {
          source = v;
          break;
        }
      }
      for (int a : g.in_arcs(v, mode)) {
        const int j = m_.free_of_arc[static_cast<std::size_t>(a)];
        if (j < 0 || !state_.can_open(j)) continue;
        const int u = g.arc_origin(a);
        const double nd = d + m_.free_arcs[static_cast<std::size_t>(j)].cost + 1e-9;
        if (nd < dist_[static_cast<std::size_t>(u)]) {
          if (std::isinf(dist_[static_cast<std::size_t>(u)])) touched.push_back(u);
          dist_[static_cast<std::size_t>(u)] = nd;
          via_[static_cast<std::size_t>(u)] = j;
          heap.emplace(nd, u);
        }
      }
    }
    std::vector<int> chain;
    if (source >= 0) {
      for (int v = source; v != target;) {
        const int j = via_[static_cast<std::size_t>(v)];
        chain.push_back(j);
        v = g.arc_dest(m_.free_arcs[static_cast<std::size_t>(j)].arc);
      }
    }
    for (int v : touched) {
      dist_[static_cast<std::size_t>(v)] = std::numeric_limits<double>::infinity();
      via_[static_cast<std::size_t>(v)] = -1;
    }
    if (source < 0) return false;
    for (int j : chain) {
      if (!state_.can_open(j)) return false;  // the chain revisits a pair group
      state_.open(j);
      opened.push_back(j);
    }
    return true;
  }

  /// Restores balance at the keys touched by `opened`; false when impossible.
  bool repair_balance(std::vector<int>& opened) {
    const std::size_t limit = 4 * opened.size() + 8;
    for (std::size_t round = 0; round < limit; ++round) {
      int surplus = -1;
      for (int j : opened) {
        const FreeArc& a = m_.free_arcs[static_cast<std::size_t>(j)];
        for (int k : {a.out_key, a.in_key})
          if (state_.imbalance(k) > 0) {
            surplus = k;
            break;
          }
        if (surplus >= 0) break;
      }
      if (surplus < 0) {
        for (int j : opened) {
          const FreeArc& a = m_.free_arcs[static_cast<std::size_t>(j)];
          if (state_.imbalance(a.out_key) != 0 || state_.imbalance(a.in_key) != 0) return false;
        }
        return true;
      }
      const BalanceKey& bk = m_.balance[static_cast<std::size_t>(surplus)];
      if (!route_into(bk.node, bk.mode, opened)) return false;
    }
    return false;
  }

  bool initial_balance() {
    if (state_.balanced()) return true;
    std::vector<int> opened;
    for (std::size_t k = 0; k < m_.balance.size() && !state_.balanced(); ++k) {
      while (state_.imbalance(static_cast<int>(k)) > 0) {
        const BalanceKey& bk = m_.balance[k];
        if (!route_into(bk.node, bk.mode, opened)) return false;
      }
    }
    if (!state_.balanced() || !m_.within_free_budget(state_.free_cost())) return false;
    base_.insert(base_.end(), opened.begin(), opened.end());
    return true;
  }

  /// Opens the unit of path `p` on the current state; returns the opened arcs or nothing.
  std::optional<std::vector<int>> apply_path(int p) {
    std::vector<int> opened;
    for (int j : m_.paths[static_cast<std::size_t>(p)].free) {
      if (state_.is_open(j)) continue;
      if (!state_.can_open(j)) {
        undo(opened);
        return std::nullopt;
      }
      state_.open(j);
      opened.push_back(j);
    }
    if (opened.empty()) return opened;
    if (!repair_balance(opened) || !m_.within_free_budget(state_.free_cost())) {
      undo(opened);
      return std::nullopt;
    }
    return opened;
  }

  void undo(const std::vector<int>& opened) {
    for (auto it = opened.rbegin(); it != opened.rend(); ++it) state_.close(*it);
  }

  /// Scores the unit of path `p` without keeping it.
  std::optional<Unit> evaluate(int p) {
    const long long before = state_.served();
    const int dead = state_.dead_core_rows();
    const double cost0 = state_.free_cost();
    auto opened = apply_path(p);
    if (!opened || opened->empty()) return std::nullopt;
    Unit u;
    u.path = p;
    u.cost = state_.free_cost() - cost0;
    u.gain = state_.served() - before;
    u.revived = dead - state_.dead_core_rows();
    u.arcs = *opened;
    undo(*opened);
    return u;
  }

  static double ratio(double value, double cost) {
    return value / std::max(cost, 1e-6);
  }

  double core_score(const Unit& u) const {
    return ratio(static_cast<double>(u.revived) * static_cast<double>(m_.bound_count() + 1) +
                     static_cast<double>(u.gain),
                 u.cost);
  }

  /// Lazy greedy on core requirements; a full rescan runs when the queue empties early.
  bool serve_core() {
    using Item = std::pair<double, int>;
    auto cmp = [](const Item& a, const Item& b) { return a.first != b.first ? a.first < b.first : a.second > b.second; };
    for (int round = 0; round < 3 && state_.dead_core_rows() > 0; ++round) {
      std::priority_queue<Item, std::vector<Item>, decltype(cmp)> heap(cmp);
      std::vector<std::uint8_t> queued(m_.paths.size(), 0);
      for (std::size_t c = 0; c < m_.core.size(); ++c) {
        if (state_.core_row_alive(static_cast<int>(c))) continue;
        for (int p : m_.core[c].paths) {
          if (queued[static_cast<std::size_t>(p)]) continue;
          queued[static_cast<std::size_t>(p)] = 1;
          auto u = evaluate(p);
          if (u && u->revived > 0) heap.emplace(core_score(*u), p);
        }
      }
      while (!heap.empty() && state_.dead_core_rows() > 0) {
        auto [score, p] = heap.top();
        heap.pop();
        auto u = evaluate(p);
        if (!u || u->revived <= 0) continue;
        const double fresh = core_score(*u);
        if (!heap.empty() && fresh < heap.top().first) {
          heap.emplace(fresh, p);
          continue;
        }
        apply_unit(*u);
      }
    }
    return state_.dead_core_rows() == 0;
  }

  /// Re-applies a unit evaluated on the current state.
  void apply_unit(const Unit& u) {
    auto opened = apply_path(u.path);
    Unit kept = u;
    kept.arcs = opened ? *opened : std::vector<int>{};
    units_.push_back(std::move(kept));
  }

  /// Lazy greedy over all paths with adopters, by riders gained per cost.
  void greedy_fill() {
    using Item = std::pair<double, int>;  // (score, path)
    auto cmp = [](const Item& a, const Item& b) { return a.first != b.first ? a.first < b.first : a.second > b.second; };
    std::priority_queue<Item, std::vector<Item>, decltype(cmp)> heap(cmp);
    for (std::size_t p = 0; p < m_.paths.size(); ++p) {
      if (m_.entries_of_path[p].empty() || state_.path_usable(static_cast<int>(p))) continue;
      auto u = evaluate(static_cast<int>(p));
      if (u && u->gain > 0) heap.emplace(ratio(static_cast<double>(u->gain), u->cost), static_cast<int>(p));
    }
    while (!heap.empty()) {
      if (out_of_time()) break;
      auto [score, p] = heap.top();
      heap.pop();
      if (state_.path_usable(p)) continue;
      auto u = evaluate(p);
      if (!u || u->gain <= 0) continue;
      const double fresh = ratio(static_cast<double>(u->gain), u->cost);
      if (!heap.empty() && fresh < heap.top().first) {
        heap.emplace(fresh, p);
        continue;
      }
      apply_unit(*u);
    }
  }

  struct Subset {
    long long count = -1;
    std::vector<int> positions;
    std::vector<Unit> units;
  };

  void explore(const std::vector<int>& pool, std::size_t t, std::vector<Unit>& chosen, Subset& best) {
    if (t == pool.size()) {
      if (state_.dead_core_rows() > 0) return;
      const long long count = state_.served();
      if (count < best.count) return;
      auto positions = state_.open_positions();
      if (count == best.count && !lex_less(positions, best.positions)) return;
      best.count = count;
      best.positions = std::move(positions);
      best.units = chosen;
      return;
    }
    if (!state_.path_usable(pool[t])) {
      if (auto opened = apply_path(pool[t])) {
        Unit u;
        u.path = pool[t];
        u.arcs = *opened;
        chosen.push_back(u);
        explore(pool, t + 1, chosen, best);
        chosen.pop_back();
        undo(*opened);
      }
    }
    explore(pool, t + 1, chosen, best);
  }

  bool lns_step() {
    const long long before = state_.served();
    const auto saved_open = state_.free_open();
    const auto saved_units = units_;

    std::vector<int> pool;
    if (!units_.empty()) {
      const auto k = std::min<std::size_t>(1 + rng_.below(3), units_.size());
      for (std::size_t r = 0; r < k; ++r) {
        const auto pick = static_cast<std::size_t>(rng_.below(units_.size()));
        for (int j : units_[pick].arcs) state_.close(j);
        pool.push_back(units_[pick].path);
        units_.erase(units_.begin() + static_cast<std::ptrdiff_t>(pick));
      }
    }
    // Dead core requirements must be repairable from the pool.
    for (std::size_t c = 0; c < m_.core.size() && pool.size() < static_cast<std::size_t>(options_.pool_size); ++c)
      if (!state_.core_row_alive(static_cast<int>(c)))
        for (int p : m_.core[c].paths)
          if (std::find(pool.begin(), pool.end(), p) == pool.end() &&
              pool.size() < static_cast<std::size_t>(options_.pool_size))
            pool.push_back(p);
    fill_pool(pool);

    Subset best;
    std::vector<Unit> chosen;
    explore(pool, 0, chosen, best);
    if (best.count >= before) {
      for (const Unit& u : best.units) {
        for (int j : u.arcs) state_.open(j);
        units_.push_back(u);
      }
      return best.count > before;
    }
    for (std::size_t j = 0; j < saved_open.size(); ++j) {
      if (saved_open[j]) state_.open(static_cast<int>(j));
      else state_.close(static_cast<int>(j));
    }
    units_ = saved_units;
    return false;
  }

  /// Adds the best-scoring paths among a random sample of unusable adopted paths.
  void fill_pool(std::vector<int>& pool) {
    const auto cap = static_cast<std::size_t>(options_.pool_size);
    if (pool.size() >= cap || m_.paths.empty()) return;
    std::vector<std::pair<double, int>> scored;
    for (int s = 0; s < options_.sample_size; ++s) {
      const int p = static_cast<int>(rng_.below(m_.paths.size()));
      if (m_.entries_of_path[static_cast<std::size_t>(p)].empty() || state_.path_usable(p)) continue;
      if (std::find(pool.begin(), pool.end(), p) != pool.end()) continue;
      if (std::any_of(scored.begin(), scored.end(), [&](const auto& x) { return x.second == p; })) continue;
      auto u = evaluate(p);
      if (!u || u->gain <= 0) continue;
      scored.emplace_back(ratio(static_cast<double>(u->gain), u->cost), p);
    }
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    for (const auto& [score, p] : scored) {
      if (pool.size() >= cap) break;
      pool.push_back(p);
    }
  }

  const CompiledModel& m_;
  HeuristicOptions options_;
  DesignState state_;
  Rng rng_;
  std::chrono::steady_clock::time_point start_;
  std::size_t modes_ = 0;
  std::vector<int> key_of_;
  std::vector<double> dist_;
  std::vector<int> via_;
  std::vector<int> base_;  // arcs opened to balance the fixed arcs
  std::vector<Unit> units_;

  bool has_best_ = false;
  long long best_count_ = 0;
  std::vector<std::uint8_t> best_open_;
  std::vector<int> best_positions_;
};

/// Orders results by objective, then by lexicographically smaller open set.
inline bool better_result(const SolveResult& a, const SolveResult& b, const CompiledModel& m) {
  if (a.has_design != b.has_design) return a.has_design;
  if (!a.has_design) return false;
  if (a.objective_count != b.objective_count) return a.objective_count > b.objective_count;
  auto positions = [&](const SolveResult& r) {
    std::vector<int> out;
    for (std::size_t j = 0; j < m.free_arcs.size(); ++j)
      if (r.design.open[static_cast<std::size_t>(m.free_arcs[j].arc)]) out.push_back(static_cast<int>(j));
    return out;
  };
  return lex_less(positions(a), positions(b));
}

}  // namespace detail

/// Seeds of the portfolio members.
inline std::uint64_t portfolio_seed(std::uint64_t seed, int member) {
  return member == 0 ? seed : mix64(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(member)));
}

inline SolveResult solve_heuristic(const CompiledModel& model, const HeuristicOptions& options = {}) {
  const auto start = std::chrono::steady_clock::now();
  const int members = std::max(1, options.portfolio_size);
  std::vector<SolveResult> results(static_cast<std::size_t>(members));
  parallel_for(results.size(), options.threads, [&](std::size_t k) {
    results[k] = detail::LocalSearch(model, options, portfolio_seed(options.seed, static_cast<int>(k))).run();
  });
  std::size_t best = 0;
  for (std::size_t k = 1; k < results.size(); ++k)
    if (detail::better_result(results[k], results[best], model)) best = k;
  SolveResult out = std::move(results[best]);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace tnd
