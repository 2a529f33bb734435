#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace tnd;
using namespace tnd::testing;

namespace {

struct Fixture {
  TripPopulation pop;
  PathSet paths;
  ChoiceModel core, adopt;
};

// Two trips with one shared walk-only candidate path each and fixed probabilities.
Fixture fixed_probabilities(double pc, double pa) {
  Fixture f;
  f.pop = TripPopulation(plain_schema(), {trip("a", {0, 0}, {1, 1}), trip("b", {0, 0}, {2, 2})});
  std::vector<std::vector<Path>> per(2);
  per[0].push_back(Path{"a#0", "a", 0, {}, 5, 5, 0, 0});
  per[1].push_back(Path{"b#0", "b", 0, {}, 5, 5, 0, 0});
  f.paths = PathSet(per);
  f.core = {ModelRole::core, TableModel{{{"a", pc}, {"b", pc}}}};
  f.adopt = {ModelRole::adopt, TableModel{{{"a#0", pa}, {"b#0", pa}}}};
  return f;
}

}  // namespace

TEST(Scenario, CountsWithinThreeSigma) {
  const double pc = 0.3, pa = 0.6;
  auto f = fixed_probabilities(pc, pa);
  const std::size_t n = 20000;
  auto bundle = sample_scenarios(f.pop, f.paths, f.core, f.adopt, n, 77);
  long long core = 0, latent = 0, adopted = 0;
  for (const auto& s : bundle.scenarios)
    for (std::size_t r = 0; r < 2; ++r) {
      if (s.is_core(r)) {
        ++core;
        EXPECT_TRUE(s.adopt[r].empty());
      } else {
        ++latent;
        adopted += s.adopt[r][0];
      }
    }
  const double trials = 2.0 * n;
  EXPECT_NEAR(core / trials, pc, 3 * std::sqrt(pc * (1 - pc) / trials));
  EXPECT_NEAR(static_cast<double>(adopted) / latent, pa, 3 * std::sqrt(pa * (1 - pa) / latent));
}

TEST(Scenario, DegenerateProbabilitiesAreExact) {
  auto f = fixed_probabilities(0.0, 1.0);
  auto bundle = sample_scenarios(f.pop, f.paths, f.core, f.adopt, 200, 3);
  for (const auto& s : bundle.scenarios) {
    EXPECT_EQ(s.core_count(), 0u);
    EXPECT_EQ(s.adopt[0][0], 1);
  }
  auto g = fixed_probabilities(1.0, 0.0);
  for (const auto& s : sample_scenarios(g.pop, g.paths, g.core, g.adopt, 200, 3).scenarios) EXPECT_EQ(s.core_count(), 2u);
}

TEST(Scenario, DeterministicAndPrefixStable) {
  auto inst = random_instance(5, 12, 1, 10);
  ChoiceModel core{ModelRole::core, TableModel{}}, adopt{ModelRole::adopt, TableModel{}};
  for (std::size_t r = 0; r < inst.population.size(); ++r) {
    std::get<TableModel>(core.body).probabilities[inst.population[r].id] = 0.0;
    for (const Path& p : inst.paths.of(r)) std::get<TableModel>(adopt.body).probabilities[p.id] = 0.5;
  }
  auto a = sample_scenarios(inst.population, inst.paths, core, adopt, 30, 9);
  auto b = sample_scenarios(inst.population, inst.paths, core, adopt, 30, 9, 4);
  auto c = sample_scenarios(inst.population, inst.paths, core, adopt, 10, 9);
  auto d = sample_scenarios(inst.population, inst.paths, core, adopt, 30, 10);
  EXPECT_EQ(write_scenarios(a, inst.population, inst.paths), write_scenarios(b, inst.population, inst.paths));
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(a.scenarios[i].core, c.scenarios[i].core);
    EXPECT_EQ(a.scenarios[i].adopt, c.scenarios[i].adopt);
  }
  EXPECT_NE(write_scenarios(a, inst.population, inst.paths), write_scenarios(d, inst.population, inst.paths));
}

TEST(Scenario, StreamsAreIndependent) {
  int agree = 0;
  const int n = 4000;
  for (int i = 0; i < n; ++i)
    agree += bernoulli_at(1, Stream::in_sample, i, 7, 0, 0.5) == bernoulli_at(1, Stream::out_of_sample, i, 7, 0, 0.5);
  EXPECT_NEAR(agree / double(n), 0.5, 3 * std::sqrt(0.25 / n));
}

TEST(Scenario, FileRoundTrip) {
  for (int trial = 0; trial < 5; ++trial) {
    auto inst = random_instance(70 + trial);
    auto text = write_scenarios(inst.bundle, inst.population, inst.paths);
    std::istringstream in(text);
    auto back = read_scenarios(in, inst.population, inst.paths);
    ASSERT_EQ(back.size(), inst.bundle.size());
    EXPECT_EQ(back.seed, inst.bundle.seed);
    for (std::size_t i = 0; i < back.size(); ++i) {
      EXPECT_EQ(back.scenarios[i].core, inst.bundle.scenarios[i].core);
      EXPECT_EQ(back.scenarios[i].adopt, inst.bundle.scenarios[i].adopt);
    }
    EXPECT_EQ(write_scenarios(back, inst.population, inst.paths), text);
  }
}

TEST(Scenario, PreInfeasibilityFindsPathlessCoreTrips) {
  Fixture f = fixed_probabilities(1.0, 0.5);
  std::vector<std::vector<Path>> per(2);
  per[1].push_back(Path{"b#0", "b", 0, {}, 5, 5, 0, 0});
  PathSet paths(per);
  ChoiceModel adopt{ModelRole::adopt, TableModel{{{"b#0", 0.5}}}};
  auto bundle = sample_scenarios(f.pop, paths, f.core, adopt, 3, 1);
  auto bad = pre_infeasibility(bundle, paths);
  ASSERT_EQ(bad.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(bad[i], (std::pair<std::size_t, std::size_t>{i, 0}));
}

TEST(Scenario, PruningReportListsRejectingLatentTrips) {
  auto f = fixed_probabilities(0.0, 0.0);
  auto bundle = sample_scenarios(f.pop, f.paths, f.core, f.adopt, 2, 1);
  auto rep = pruning_report(bundle);
  EXPECT_EQ(rep[0], (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(coverage_bound_total(bundle, f.pop), 0);
}

TEST(Scenario, CoverageBoundMatchesAllOpenOracle) {
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = random_instance(200 + trial);
    if (!pre_infeasibility(inst.bundle, inst.paths).empty()) continue;
    std::vector<std::uint8_t> open(inst.graph.arcs().size(), 1);
    EXPECT_EQ(coverage_bound_total(inst.bundle, inst.population),
              oracle_count(inst.population, inst.paths, inst.bundle, open));
  }
}

TEST(Scenario, RejectsEmptyCount) {
  auto f = fixed_probabilities(0.5, 0.5);
  EXPECT_THROW(sample_scenarios(f.pop, f.paths, f.core, f.adopt, 0, 1), std::invalid_argument);
}
