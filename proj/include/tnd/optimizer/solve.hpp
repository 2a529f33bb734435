#pragma once

#include <string>
#include <string_view>

#include "tnd/optimizer/exact.hpp"
#include "tnd/optimizer/heuristic.hpp"
#include "tnd/optimizer/model.hpp"

namespace tnd {

enum class SolverKind { exact, heuristic };

inline SolverKind parse_solver_kind(std::string_view s) {
  if (s == "exact") return SolverKind::exact;
  if (s == "heuristic") return SolverKind::heuristic;
  throw std::invalid_argument(fmt::format("unknown solver '{}'", s));
}

struct SolverOptions {
  SolverKind kind = SolverKind::heuristic;
  double time_limit_s = 60.0;
  std::uint64_t seed = 1;
  int iterations = 200;
  int portfolio_size = 1;
  unsigned threads = 1;
};

inline SolveResult solve(const CompiledModel& model, const SolverOptions& options) {
  if (options.kind == SolverKind::exact) return solve_exact(model, {options.time_limit_s});
  HeuristicOptions h;
  h.time_limit_s = options.time_limit_s;
  h.seed = options.seed;
  h.iterations = options.iterations;
  h.portfolio_size = options.portfolio_size;
  h.threads = options.threads;
  return solve_heuristic(model, h);
}

}  // namespace tnd
