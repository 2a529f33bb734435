#pragma once

// Depth-first branch and bound over the free arcs in index order, trying
// "open" before "closed". A node is cut when the budget, pair-mode or
// reachable flow-balance range is violated, when some core requirement has no
// path left that is still openable within budget, or when the optimistic count
// (entries with an adopted path not yet cut by a closed arc) cannot beat the
// incumbent. Equal objectives are resolved toward the lexicographically
// smallest set of open free arcs.

#include <chrono>
#include <limits>
#include <vector>

#include "tnd/optimizer/model.hpp"

namespace tnd {

struct ExactOptions {
  double time_limit_s = 60.0;
};

namespace detail {

/// True when every design extending prefix `p` (open positions below `depth`)
/// sorts after `incumbent`.
inline bool completions_after(const std::vector<int>& p, const std::vector<int>& incumbent, int depth) {
  std::size_t pre = 0;
  while (pre < incumbent.size() && incumbent[pre] < depth) ++pre;
  const std::size_t n = std::min(p.size(), pre);
  for (std::size_t t = 0; t < n; ++t)
    if (p[t] != incumbent[t]) return p[t] > incumbent[t];
  if (p.size() <= pre) return false;
  return pre == incumbent.size();
}

class BranchAndBound {
 public:
  BranchAndBound(const CompiledModel& m, const ExactOptions& options)
      : m_(m), options_(options), state_(m), start_(std::chrono::steady_clock::now()) {
    const std::size_t n = m.free_arcs.size();
    cut_.assign(m.paths.size(), 0);
    entry_viable_.assign(m.entries.size(), 0);
    bound_ = m.core_constant;
    for (std::size_t e = 0; e < m.entries.size(); ++e) {
      entry_viable_[e] = static_cast<int>(m.entries[e].paths.size()) + (m.entries[e].walk_served ? 1 : 0);
      if (entry_viable_[e] > 0) bound_ += m.entries[e].riders;
    }
    core_viable_.assign(m.core.size(), 0);
    for (std::size_t c = 0; c < m.core.size(); ++c) {
      core_viable_[c] = static_cast<int>(m.core[c].paths.size()) + (m.core[c].walk_served ? 1 : 0);
      if (core_viable_[c] == 0) ++dead_core_;
    }
    undecided_out_.assign(m.balance.size(), 0);
    undecided_in_.assign(m.balance.size(), 0);
    for (std::size_t j = 0; j < n; ++j) {
      undecided_out_[static_cast<std::size_t>(m.free_arcs[j].out_key)] += m.free_arcs[j].frequency;
      undecided_in_[static_cast<std::size_t>(m.free_arcs[j].in_key)] += m.free_arcs[j].frequency;
    }
  }

  SolveResult run() {
    SolveResult result;
    result.bound = m_.to_objective(bound_);
    bool root_ok = state_.pair_mode_ok() && m_.within_free_budget(0.0) && dead_core_ == 0;
    for (std::size_t k = 0; root_ok && k < m_.balance.size(); ++k) root_ok = balance_reachable(static_cast<int>(k));
    if (root_ok) search(0);
    result.stats.nodes = nodes_;
    result.wall_seconds = elapsed();
    if (has_incumbent_) {
      result.has_design = true;
      result.design = m_.design_from(best_open_);
      result.objective_count = best_count_;
      result.objective = m_.to_objective(best_count_);
      result.status = timed_out_ ? SolveStatus::timeout : SolveStatus::optimal;
      if (!timed_out_) result.bound = result.objective;
    } else {
      result.status = timed_out_ ? SolveStatus::timeout : SolveStatus::infeasible;
      if (!timed_out_) {
        result.witnesses = core_witnesses(m_);
        result.message = "no design satisfies budget, flow balance, pair-mode and core service together";
      } else {
        result.message = "time limit reached before any feasible design was found";
      }
    }
    return result;
  }

 private:
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  bool balance_reachable(int key) const {
    const long long cur = state_.imbalance(key);
    const auto k = static_cast<std::size_t>(key);
    return cur - undecided_in_[k] <= 0 && 0 <= cur + undecided_out_[k];
  }

  /// Every core requirement still has a path whose undecided arcs fit in the remaining budget.
  bool core_reachable(int depth) const {
    if (dead_core_ > 0) return false;
    const double room = m_.free_budget() - state_.free_cost();
    for (std::size_t c = 0; c < m_.core.size(); ++c) {
      const auto& row = m_.core[c];
      if (row.walk_served || state_.core_row_alive(static_cast<int>(c))) continue;
      double cheapest = std::numeric_limits<double>::infinity();
      for (int p : row.paths) {
        if (cut_[static_cast<std::size_t>(p)]) continue;
        double need = 0.0;
        for (int j : m_.paths[static_cast<std::size_t>(p)].free)
          if (j >= depth) need += m_.free_arcs[static_cast<std::size_t>(j)].cost;
        cheapest = std::min(cheapest, need);
      }
      if (!within_budget(cheapest, room)) return false;
    }
    return true;
  }

  bool worth_exploring(int depth) const {
    if (!has_incumbent_) return true;
    if (bound_ != best_count_) return bound_ > best_count_;
    return !completions_after(prefix_, best_open_positions_, depth);
  }

  void search(int depth) {
    if (timed_out_) return;
    if ((++nodes_ & 255) == 0 && elapsed() > options_.time_limit_s) {
      timed_out_ = true;
      return;
    }
    if (!worth_exploring(depth) || !core_reachable(depth)) return;
    if (depth == static_cast<int>(m_.free_arcs.size())) {
      leaf();
      return;
    }
    const FreeArc& a = m_.free_arcs[static_cast<std::size_t>(depth)];
    undecided_out_[static_cast<std::size_t>(a.out_key)] -= a.frequency;
    undecided_in_[static_cast<std::size_t>(a.in_key)] -= a.frequency;

    if (state_.can_open(depth) && m_.within_free_budget(state_.free_cost() + a.cost)) {
      state_.open(depth);
      prefix_.push_back(depth);
      if (balance_reachable(a.out_key) && balance_reachable(a.in_key)) search(depth + 1);
      prefix_.pop_back();
      state_.close(depth);
    }

    cut_arc(depth, +1);
    if (balance_reachable(a.out_key) && balance_reachable(a.in_key)) search(depth + 1);
    cut_arc(depth, -1);

    undecided_out_[static_cast<std::size_t>(a.out_key)] += a.frequency;
    undecided_in_[static_cast<std::size_t>(a.in_key)] += a.frequency;
  }

  void cut_arc(int j, int delta) {
    for (int p : m_.paths_of_free[static_cast<std::size_t>(j)]) {
      auto& c = cut_[static_cast<std::size_t>(p)];
      const bool was = c > 0;
      c += delta;
      if (was == (c > 0)) continue;
      const int step = c > 0 ? -1 : 1;
      for (int e : m_.entries_of_path[static_cast<std::size_t>(p)]) {
        auto& v = entry_viable_[static_cast<std::size_t>(e)];
        const bool had = v > 0;
        v += step;
        if (had != (v > 0)) bound_ += (v > 0 ? 1 : -1) * m_.entries[static_cast<std::size_t>(e)].riders;
      }
      for (int r : m_.core_of_path[static_cast<std::size_t>(p)]) {
        auto& v = core_viable_[static_cast<std::size_t>(r)];
        const bool had = v > 0;
        v += step;
        if (had != (v > 0)) dead_core_ += v > 0 ? -1 : 1;
      }
    }
  }

  void leaf() {
    if (!state_.feasible()) return;
    const long long count = state_.served();
    if (has_incumbent_ && (count < best_count_ || (count == best_count_ && !lex_less(prefix_, best_open_positions_))))
      return;
    has_incumbent_ = true;
    best_count_ = count;
    best_open_ = state_.free_open();
    best_open_positions_ = prefix_;
  }

  const CompiledModel& m_;
  ExactOptions options_;
  DesignState state_;
  std::chrono::steady_clock::time_point start_;

  std::vector<int> cut_;  // per path: decided-closed free arcs
  std::vector<int> entry_viable_;
  std::vector<int> core_viable_;
  std::vector<long long> undecided_out_, undecided_in_;
  long long bound_ = 0;
  int dead_core_ = 0;
  std::vector<int> prefix_;

  bool has_incumbent_ = false;
  long long best_count_ = 0;
  std::vector<std::uint8_t> best_open_;
  std::vector<int> best_open_positions_;
  long long nodes_ = 0;
  bool timed_out_ = false;
};

}  // namespace detail

inline SolveResult solve_exact(const CompiledModel& model, const ExactOptions& options = {}) {
  return detail::BranchAndBound(model, options).run();
}

}  // namespace tnd
