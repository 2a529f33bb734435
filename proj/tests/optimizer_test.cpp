#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"
#include "tnd/optimizer/export.hpp"
#include "tnd/optimizer/replay.hpp"
#include "tnd/optimizer/solve.hpp"

using namespace tnd;
using namespace tnd::testing;

namespace {

std::optional<CompiledModel> try_compile(const RandomInstance& inst, double budget) {
  try {
    return compile(inst.graph, inst.population, inst.paths, inst.bundle, budget);
  } catch (const InfeasibleError&) {
    return std::nullopt;
  }
}

bool rows_hold(const std::vector<Row>& rows, const std::vector<int>& x, std::string_view only_family = {}) {
  for (const Row& r : rows) {
    if (!only_family.empty() && r.family != only_family) continue;
    double lhs = 0.0;
    for (const Term& t : r.terms) lhs += t.coef * x[static_cast<std::size_t>(t.var)];
    const bool ok = r.sense == Sense::le ? lhs <= r.rhs + 1e-9 : r.sense == Sense::ge ? lhs >= r.rhs - 1e-9
                                                                                      : std::abs(lhs - r.rhs) < 1e-9;
    if (!ok) return false;
  }
  return true;
}

std::vector<std::uint8_t> random_open(const TransitGraph& g, std::mt19937_64& gen) {
  std::vector<std::uint8_t> open(g.arcs().size());
  for (std::size_t a = 0; a < open.size(); ++a) open[a] = g.arcs()[a].is_fixed ? 1 : static_cast<std::uint8_t>(gen() & 1);
  return open;
}

}  // namespace

TEST(Optimizer, AndRowsAdmitOnlyTheConjunction) {
  // f <= z_a for each a, f >= sum z - (n - 1): enumerate every (z, f) on 1..4 arcs.
  for (int n = 1; n <= 4; ++n) {
    for (int mask = 0; mask < (1 << n); ++mask) {
      std::vector<int> admitted;
      for (int f = 0; f <= 1; ++f) {
        bool ok = true;
        int sum = 0;
        for (int a = 0; a < n; ++a) {
          const int z = mask >> a & 1;
          ok = ok && f <= z;
          sum += z;
        }
        ok = ok && f >= sum - (n - 1);
        if (ok) admitted.push_back(f);
      }
      ASSERT_EQ(admitted.size(), 1u);
      EXPECT_EQ(admitted[0], mask == (1 << n) - 1 ? 1 : 0);
    }
  }
}

TEST(Optimizer, LinkingRowsPinIndicatorsToTheDesign) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = random_instance(300 + trial);
    auto m = try_compile(inst, inst.budget);
    if (!m) continue;
    auto rows = model_rows(*m);
    VariableSpace vs(*m);
    for (int k = 0; k < 8; ++k) {
      auto open = random_open(inst.graph, gen);
      NetworkDesign d{open};
      auto x = assignment_of(d, *m);
      EXPECT_TRUE(rows_hold(rows, x, "adoption or"));
      EXPECT_TRUE(rows_hold(rows, x, "path and upper"));
      EXPECT_TRUE(rows_hold(rows, x, "path and lower"));
      for (int v = vs.arcs; v < vs.size(); ++v) {
        auto y = x;
        y[static_cast<std::size_t>(v)] ^= 1;
        const bool linked = rows_hold(rows, y, "adoption or") && rows_hold(rows, y, "path and upper") &&
                            rows_hold(rows, y, "path and lower");
        EXPECT_FALSE(linked) << vs.name(v);
      }
    }
  }
}

TEST(Optimizer, ReplayMatchesOracleCount) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 30; ++trial) {
    auto inst = random_instance(400 + trial);
    for (int k = 0; k < 10; ++k) {
      auto open = random_open(inst.graph, gen);
      auto rep = replay_in_sample(NetworkDesign{open}, inst.population, inst.paths, inst.bundle);
      auto oracle = oracle_count(inst.population, inst.paths, inst.bundle, open);
      if (oracle < 0) {
        EXPECT_FALSE(rep.violations.empty());
      } else {
        EXPECT_TRUE(rep.violations.empty());
        EXPECT_EQ(rep.count, oracle);
      }
    }
  }
}

TEST(Optimizer, ExactMatchesBruteForce) {
  int solved = 0, infeasible = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = random_instance(1000 + trial / 2, 12, 5, 6);
    // Odd trials shrink the budget so some instances become infeasible.
    if (trial % 2) inst.budget = std::round(inst.budget * 0.15);
    auto brute = brute_force(inst);
    auto m = try_compile(inst, inst.budget);
    if (!m) {
      EXPECT_EQ(brute.best, -1) << "trial " << trial;
      ++infeasible;
      continue;
    }
    auto res = solve_exact(*m);
    if (brute.best < 0) {
      EXPECT_EQ(res.status, SolveStatus::infeasible) << "trial " << trial;
      EXPECT_FALSE(res.has_design);
      ++infeasible;
      continue;
    }
    ASSERT_EQ(res.status, SolveStatus::optimal) << "trial " << trial;
    EXPECT_EQ(res.objective_count, brute.best) << "trial " << trial;
    EXPECT_NE(std::find(brute.optimal.begin(), brute.optimal.end(), res.design.open), brute.optimal.end());
    EXPECT_DOUBLE_EQ(res.objective, static_cast<double>(brute.best) / inst.bundle.size());
    ++solved;
  }
  EXPECT_GE(solved, 40);
  EXPECT_GE(infeasible, 1);
}

TEST(Optimizer, HeuristicIsFeasibleBoundedAndDeterministic) {
  for (int trial = 0; trial < 40; ++trial) {
    auto inst = random_instance(2000 + trial);
    auto m = try_compile(inst, inst.budget);
    if (!m) continue;
    auto exact = solve_exact(*m);
    HeuristicOptions h;
    h.seed = 3;
    h.iterations = 50;
    auto a = solve_heuristic(*m, h);
    auto b = solve_heuristic(*m, h);
    EXPECT_EQ(a.has_design, b.has_design);
    if (!a.has_design) {
      EXPECT_EQ(a.status, SolveStatus::infeasible);
      continue;
    }
    EXPECT_EQ(a.design, b.design);
    ASSERT_TRUE(exact.has_design) << "heuristic found a design the exact search missed, trial " << trial;
    EXPECT_TRUE(oracle_feasible(inst.graph, a.design.open, inst.budget));
    const auto count = oracle_count(inst.population, inst.paths, inst.bundle, a.design.open);
    EXPECT_EQ(count, a.objective_count);
    EXPECT_LE(a.objective_count, exact.objective_count);
    EXPECT_LE(exact.objective, a.bound + 1e-12);
    EXPECT_LE(exact.objective_count, m->bound_count());
  }
}

TEST(Optimizer, PortfolioIsThreadInvariant) {
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = random_instance(2100 + trial, 12, 5, 10);
    auto m = try_compile(inst, inst.budget);
    if (!m) continue;
    HeuristicOptions h;
    h.portfolio_size = 4;
    h.iterations = 30;
    h.threads = 1;
    auto a = solve_heuristic(*m, h);
    h.threads = 4;
    auto b = solve_heuristic(*m, h);
    EXPECT_EQ(a.has_design, b.has_design);
    if (a.has_design) EXPECT_EQ(a.design, b.design);
  }
}

TEST(Optimizer, OptimumIsMonotoneInBudget) {
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = random_instance(3000 + trial);
    long long last = -1;
    for (double scale : {0.25, 0.5, 0.75, 1.0, 1.5, 3.0}) {
      auto m = try_compile(inst, inst.budget * scale);
      if (!m) break;
      auto res = solve_exact(*m);
      const long long v = res.has_design ? res.objective_count : -1;
      EXPECT_GE(v, last) << "trial " << trial << " scale " << scale;
      last = std::max(last, v);
    }
  }
}

TEST(Optimizer, ExportedSolutionsVerify) {
  int checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    auto inst = random_instance(4000 + trial);
    auto m = try_compile(inst, inst.budget);
    if (!m) continue;
    auto res = solve_exact(*m);
    if (!res.has_design) continue;
    ++checked;
    auto x = assignment_of(res.design, *m);

    std::istringstream lp_in(write_solution(x, *m));
    auto from_lp = read_solution(lp_in, *m);
    EXPECT_EQ(from_lp, x);
    std::string opb = "s OPTIMUM FOUND\nv";
    for (std::size_t v = 0; v < x.size(); ++v) opb += fmt::format(" {}x{}", x[v] ? "" : "-", v + 1);
    std::istringstream opb_in(opb + "\n");
    EXPECT_EQ(read_solution(opb_in, *m), x);

    auto rep = verify_solution(x, *m);
    EXPECT_TRUE(rep.accepted());
    EXPECT_EQ(rep.objective_count, res.objective_count);
    EXPECT_EQ(rep.design, res.design);

    // Tamper: claim an extra adoption, or close a fixed arc.
    VariableSpace vs(*m);
    for (int e = 0; e < vs.entries; ++e) {
      if (x[static_cast<std::size_t>(vs.d(e))]) continue;
      auto y = x;
      y[static_cast<std::size_t>(vs.d(e))] = 1;
      auto bad = verify_solution(y, *m);
      EXPECT_FALSE(bad.accepted());
      EXPECT_EQ(bad.violated_families, std::vector<std::string>{"adoption or"});
      break;
    }
    for (std::size_t a = 0; a < inst.graph.arcs().size(); ++a) {
      if (!inst.graph.arcs()[a].is_fixed) continue;
      auto y = x;
      y[a] = 0;
      auto bad = verify_solution(y, *m);
      EXPECT_FALSE(bad.accepted());
      EXPECT_NE(std::find(bad.violated_families.begin(), bad.violated_families.end(), "fixed arcs"),
                bad.violated_families.end());
      break;
    }
  }
  EXPECT_GE(checked, 10);
}

TEST(Optimizer, ExportTextShape) {
  auto inst = random_instance(4100);
  auto m = try_compile(inst, 123.45);
  ASSERT_TRUE(m);
  auto lp = write_lp(*m);
  EXPECT_NE(lp.find("Maximize"), std::string::npos);
  EXPECT_NE(lp.find(" budget: "), std::string::npos);
  EXPECT_NE(lp.find("<= 123.45"), std::string::npos);
  EXPECT_EQ(lp.substr(lp.size() - 4), "End\n");
  auto opb = write_opb(*m);
  VariableSpace vs(*m);
  EXPECT_EQ(opb.substr(0, opb.find('\n')),
            fmt::format("* #variable= {} #constraint= {}", vs.size(), model_rows(*m).size()));
  EXPECT_NE(opb.find(">= -12345 ;"), std::string::npos);
  std::istringstream bad("z_0 0.5\n");
  EXPECT_THROW(read_solution(bad, *m), ParseError);
  std::istringstream unknown("q_1 1\n");
  EXPECT_THROW(read_solution(unknown, *m), ParseError);
}

TEST(Optimizer, PathlessCoreTripIsInfeasibleBeforeSearch) {
  TransitGraph g({stop("a", 0, 0), stop("b", 1000, 0)}, {bus("ab", "a", "b", 3, 1), bus("ba", "b", "a", 3, 1)});
  TripPopulation pop(plain_schema(), {trip("far", {0, 0}, {90000, 0})});
  PathSet paths(std::vector<std::vector<Path>>(1));
  ChoiceModel core{ModelRole::core, TableModel{{{"far", 1.0}}}};
  ChoiceModel adopt{ModelRole::adopt, TableModel{}};
  auto bundle = sample_scenarios(pop, paths, core, adopt, 2, 1);
  EXPECT_THROW(compile(g, pop, paths, bundle, 10.0), InfeasibleError);
}

TEST(Optimizer, SolverKindParsing) {
  EXPECT_EQ(parse_solver_kind("exact"), SolverKind::exact);
  EXPECT_EQ(parse_solver_kind("heuristic"), SolverKind::heuristic);
  EXPECT_THROW(parse_solver_kind("magic"), std::invalid_argument);
}
