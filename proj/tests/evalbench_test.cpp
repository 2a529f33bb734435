#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "support.hpp"
#include "tnd/evalbench.hpp"

using namespace tnd;
using namespace tnd::testing;

namespace {

struct Oracle {
  double mean = 0.0;
  double variance = 0.0;
  double coverage = 0.0;
};

// Per-trip outcome distribution by enumerating every adoption pattern; trips are independent.
Oracle oracle_eval(const NetworkDesign& design, const RandomInstance& inst, const TableModel& core,
                   const TableModel& adopt, double penalty) {
  Oracle out;
  for (std::size_t r = 0; r < inst.population.size(); ++r) {
    const Trip& t = inst.population[r];
    const double e = t.riders, pc = core.probabilities.at(t.id);
    const auto& ps = inst.paths.of(r);
    bool any_usable = false;
    for (const auto& p : ps) any_usable = any_usable || oracle_path_open(p, design.open);
    // Outcome values with probabilities.
    std::map<double, double> dist;
    dist[any_usable ? e : -penalty * e] += pc;
    for (std::uint64_t mask = 0; mask < (1ULL << ps.size()); ++mask) {
      double pr = 1 - pc;
      bool used = false;
      for (std::size_t k = 0; k < ps.size(); ++k) {
        const double q = adopt.probabilities.at(ps[k].id);
        const bool yes = mask >> k & 1;
        pr *= yes ? q : 1 - q;
        used = used || (yes && oracle_path_open(ps[k], design.open));
      }
      dist[used ? e : 0.0] += pr;
    }
    double m = 0, m2 = 0;
    for (auto [v, p] : dist) {
      m += v * p;
      m2 += v * v * p;
      if (v > 0) out.coverage += v * p;
    }
    out.mean += m;
    out.variance += m2 - m * m;
  }
  return out;
}

struct Tables {
  TableModel core, adopt;
};

Tables random_tables(const RandomInstance& inst, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Tables t;
  for (std::size_t r = 0; r < inst.population.size(); ++r) {
    t.core.probabilities[inst.population[r].id] = u(gen) < 0.3 ? 0.4 * u(gen) : 0.0;
    for (const Path& p : inst.paths.of(r)) t.adopt.probabilities[p.id] = u(gen);
  }
  return t;
}

NetworkDesign random_design(const TransitGraph& g, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  NetworkDesign d = NetworkDesign::fixed_only(g);
  for (std::size_t a = 0; a < d.open.size(); ++a) d.open[a] = d.open[a] || (gen() & 1);
  return d;
}

}  // namespace

TEST(Eval, ClosedFormMatchesEnumeration) {
  for (int trial = 0; trial < 30; ++trial) {
    auto inst = random_instance(600 + trial, 12, 1, 8);
    auto tables = random_tables(inst, trial);
    auto design = random_design(inst.graph, trial);
    for (double penalty : {0.0, 1.0, 2.5}) {
      auto oracle = oracle_eval(design, inst, tables.core, tables.adopt, penalty);
      auto got = expected_eval(design, inst.population, inst.paths, {ModelRole::core, tables.core},
                               {ModelRole::adopt, tables.adopt}, penalty);
      EXPECT_NEAR(got.value, oracle.mean, 1e-9);
      EXPECT_NEAR(got.variance, oracle.variance, 1e-9);
      EXPECT_NEAR(got.coverage, oracle.coverage, 1e-9);
    }
  }
}

TEST(Eval, MonteCarloWithinThreeStandardErrors) {
  for (int trial = 0; trial < 8; ++trial) {
    auto inst = random_instance(700 + trial, 12, 1, 12);
    auto tables = random_tables(inst, 50 + trial);
    auto design = random_design(inst.graph, 90 + trial);
    ChoiceModel core{ModelRole::core, tables.core}, adopt{ModelRole::adopt, tables.adopt};
    EvalConfig cfg;
    cfg.scenarios = 20000;
    cfg.seed = 11 + trial;
    auto rep = eval_design(design, inst.population, inst.paths, core, adopt, cfg);
    auto oracle = oracle_eval(design, inst, tables.core, tables.adopt, cfg.penalty);
    EXPECT_NEAR(rep.eval_value, oracle.mean, 3 * std::sqrt(oracle.variance / cfg.scenarios) + 1e-12);
  }
}

TEST(Eval, PenaltyIsMonotone) {
  auto inst = random_instance(801, 12, 1, 12);
  auto tables = random_tables(inst, 4);
  auto design = NetworkDesign::fixed_only(inst.graph);
  ChoiceModel core{ModelRole::core, tables.core}, adopt{ModelRole::adopt, tables.adopt};
  double last = std::numeric_limits<double>::infinity();
  double coverage = -1;
  for (double penalty : {0.0, 0.5, 1.0, 4.0}) {
    EvalConfig cfg;
    cfg.scenarios = 500;
    cfg.penalty = penalty;
    auto rep = eval_design(design, inst.population, inst.paths, core, adopt, cfg);
    EXPECT_LE(rep.eval_value, last);
    if (coverage >= 0) EXPECT_EQ(rep.mean_coverage, coverage);
    coverage = rep.mean_coverage;
    last = rep.eval_value;
  }
  EvalConfig bad;
  bad.penalty = -1;
  EXPECT_THROW(eval_design(design, inst.population, inst.paths, core, adopt, bad), std::invalid_argument);
}

TEST(Eval, PerTripPenaltyOverride) {
  TransitGraph g({stop("a", 0, 0), stop("b", 1000, 0)}, {bus("ab", "a", "b", 3, 1), bus("ba", "b", "a", 3, 1)});
  TripPopulation pop(plain_schema(), {trip("x", {0, 0}, {1000, 0}, 2), trip("y", {0, 0}, {1000, 0}, 1)});
  std::vector<std::vector<Path>> per(2);
  per[0].push_back(Path{"x#0", "x", 0, {0}, 8, 0, 3, 0});
  per[1].push_back(Path{"y#0", "y", 0, {0}, 8, 0, 3, 0});
  PathSet paths(per);
  ChoiceModel core{ModelRole::core, TableModel{{{"x", 1.0}, {"y", 1.0}}}};
  ChoiceModel adopt{ModelRole::adopt, TableModel{{{"x#0", 0.0}, {"y#0", 0.0}}}};
  EvalConfig cfg;
  cfg.scenarios = 3;
  cfg.penalty = 1.0;
  cfg.trip_penalty["x"] = 5.0;
  auto rep = eval_design(NetworkDesign::all_closed(g), pop, paths, core, adopt, cfg);
  EXPECT_DOUBLE_EQ(rep.eval_value, -(5.0 * 2 + 1.0 * 1));
  EXPECT_EQ(rep.violations, 6);
  auto open = eval_design(NetworkDesign::all_open(g), pop, paths, core, adopt, cfg);
  EXPECT_DOUBLE_EQ(open.eval_value, 3.0);
  EXPECT_DOUBLE_EQ(open.mean_travel_time, 8.0);
}

TEST(Eval, ThreadCountDoesNotChangeReport) {
  auto inst = random_instance(802, 12, 1, 20);
  auto tables = random_tables(inst, 5);
  auto design = random_design(inst.graph, 5);
  ChoiceModel core{ModelRole::core, tables.core}, adopt{ModelRole::adopt, tables.adopt};
  EvalConfig cfg;
  cfg.scenarios = 300;
  auto a = eval_design(design, inst.population, inst.paths, core, adopt, cfg);
  cfg.threads = 4;
  auto b = eval_design(design, inst.population, inst.paths, core, adopt, cfg);
  EXPECT_EQ(a.eval_value, b.eval_value);
  EXPECT_EQ(a.violations, b.violations);
  EXPECT_EQ(a.mean_travel_time, b.mean_travel_time);
}

TEST(Eval, BundleReplayMatchesOracleCount) {
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = random_instance(900 + trial);
    auto design = random_design(inst.graph, trial);
    auto count = oracle_count(inst.population, inst.paths, inst.bundle, design.open);
    auto rep = eval_on_bundle(design, inst.population, inst.paths, inst.bundle);
    if (count < 0) {
      EXPECT_GT(rep.violations, 0);
      continue;
    }
    EXPECT_EQ(rep.violations, 0);
    EXPECT_NEAR(rep.mean_coverage * inst.bundle.size(), static_cast<double>(count), 1e-9);
    EXPECT_NEAR(rep.eval_value, rep.mean_coverage, 1e-12);
  }
}

TEST(Bench, FixedDemandAndThresholdBundles) {
  auto inst = random_instance(950, 12, 1, 10);
  std::vector<Trip> ts = inst.population.trips();
  for (std::size_t r = 0; r < ts.size(); ++r) ts[r].current_mode = r % 2 ? TravelMode::transit : TravelMode::drive;
  TripPopulation pop(plain_schema(), ts);
  auto fd = fixed_demand_bundle(pop, inst.paths);
  ASSERT_EQ(fd.size(), 1u);
  for (std::size_t r = 0; r < ts.size(); ++r) {
    EXPECT_FALSE(fd.scenarios[0].is_core(r));
    for (auto d : fd.scenarios[0].adopt[r]) EXPECT_EQ(d, r % 2);
  }
  auto tables = random_tables(inst, 6);
  auto det = threshold_bundle(pop, inst.paths, {ModelRole::core, tables.core}, {ModelRole::adopt, tables.adopt}, 0.5);
  for (std::size_t r = 0; r < ts.size(); ++r) {
    EXPECT_EQ(det.scenarios[0].is_core(r), tables.core.probabilities.at(ts[r].id) >= 0.5);
    if (det.scenarios[0].is_core(r)) continue;
    for (std::size_t k = 0; k < inst.paths.of(r).size(); ++k)
      EXPECT_EQ(det.scenarios[0].adopt[r][k], tables.adopt.probabilities.at(inst.paths.of(r)[k].id) >= 0.5);
  }
  EXPECT_THROW(threshold_bundle(pop, inst.paths, {ModelRole::core, tables.core}, {ModelRole::adopt, tables.adopt}, 1.5),
               std::invalid_argument);
}

TEST(Bench, ReportShape) {
  BenchRow ok;
  ok.method = "Full";
  ok.solve.status = SolveStatus::optimal;
  ok.solve.has_design = true;
  ok.solve.wall_seconds = 1.234;
  ok.coverage = 12.5;
  ok.coverage_bound = 20.0;
  ok.out_of_sample.eval_value = 11.0;
  ok.out_of_sample.violations = 3;
  BenchRow none;
  none.method = "RB";
  none.solve.status = SolveStatus::infeasible;
  auto csv = report_csv({ok, none}, true);
  std::istringstream in(csv);
  std::string header, a, b;
  std::getline(in, header);
  std::getline(in, a);
  std::getline(in, b);
  EXPECT_EQ(header,
            "method,status,run_time_s,opened_bus_arcs,mean_core,mean_latent,adopted,adopted_pct,coverage,coverage_bound,"
            "travel_time_min,eval,violations");
  EXPECT_EQ(a, "Full,optimal,-,0,0.00,0.00,0.00,0.00,12.50,20.00,0.00,11.00,3");
  EXPECT_EQ(b, "RB,infeasible,-,-,-,-,-,-,-,-,-,-,-");
  EXPECT_NE(report_csv({ok}).find("1.23"), std::string::npos);
  auto text = report_text({ok, none});
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}

TEST(Bench, GeojsonListsOpenArcs) {
  auto inst = random_instance(960);
  auto design = random_design(inst.graph, 1);
  auto doc = nlohmann::json::parse(design_geojson(design, inst.graph));
  std::size_t open = 0;
  for (auto o : design.open) open += o;
  EXPECT_EQ(doc["type"], "FeatureCollection");
  EXPECT_EQ(doc["features"].size(), open);
  for (const auto& f : doc["features"]) EXPECT_EQ(f["geometry"]["coordinates"].size(), 2u);
}

TEST(Bench, FullBeatsNothingOnSmallInstance) {
  // End-to-end run of the benchmark entry points on a random instance.
  auto inst = random_instance(970, 12, 1, 10);
  auto tables = random_tables(inst, 9);
  ChoiceModel core{ModelRole::core, tables.core}, adopt{ModelRole::adopt, tables.adopt};
  BenchInputs in;
  in.graph = &inst.graph;
  in.population = &inst.population;
  in.paths = &inst.paths;
  in.true_core = &core;
  in.true_adopt = &adopt;
  in.budget = inst.budget;
  in.solver.kind = SolverKind::exact;
  in.eval.scenarios = 200;
  auto full = benchmark_full(in, core, adopt, 5, 1);
  auto fd = benchmark_fd(in);
  EXPECT_EQ(full.method, "Full");
  EXPECT_EQ(fd.method, "FD");
  EXPECT_FALSE(fd.choice_columns);
  if (full.solve.has_design) {
    ASSERT_TRUE(full.coverage_bound);
    EXPECT_LE(full.coverage, *full.coverage_bound + 1e-12);
    EXPECT_EQ(full.out_of_sample.scenarios, 200u);
  }
}
