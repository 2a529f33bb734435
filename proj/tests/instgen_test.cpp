#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"
#include "tnd/instgen.hpp"
#include "tnd/netmodel_io.hpp"

using namespace tnd;
using namespace tnd::testing;

namespace {

std::string fingerprint(const Instance& inst) {
  return write_nodes(inst.graph.nodes()) + write_arcs(inst.graph.arcs()) + write_trips(inst.population);
}

}  // namespace

TEST(Instgen, SameSeedSameInstance) {
  GenSpec spec = preset_spec("tiny");
  spec.seed = 12;
  auto a = generate(spec), b = generate(spec);
  EXPECT_EQ(fingerprint(a), fingerprint(b));
  spec.seed = 13;
  EXPECT_NE(fingerprint(generate(spec)), fingerprint(a));
}

TEST(Instgen, PresetShapes) {
  for (std::string name : {"tiny", "small", "medium"}) {
    auto spec = preset_spec(name);
    auto inst = generate(spec);
    EXPECT_EQ(inst.graph.nodes().size(), static_cast<std::size_t>(spec.cols * spec.rows)) << name;
    EXPECT_EQ(inst.population.size(), static_cast<std::size_t>(spec.trips)) << name;
    if (spec.max_bus_pairs > 0) {
      std::size_t bus_arcs = 0;
      for (const Arc& a : inst.graph.arcs()) bus_arcs += a.mode == kBus;
      EXPECT_LE(bus_arcs, 2u * static_cast<std::size_t>(spec.max_bus_pairs)) << name;
    }
  }
  EXPECT_THROW(preset_spec("huge"), std::invalid_argument);
}

TEST(Instgen, GeneratedNetworkIsValid) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GenSpec spec = preset_spec("small");
    spec.seed = seed;
    auto inst = generate(spec);
    const auto& g = inst.graph;
    // Fixed-only design is balanced and cost-free, free arcs are bus with positive cost.
    EXPECT_TRUE(check_design_feasibility(NetworkDesign::fixed_only(g), g, 0.0).feasible());
    double total = 0.0;
    for (const Arc& a : g.arcs()) {
      if (a.is_fixed) {
        EXPECT_EQ(a.mode, kRail);
        EXPECT_EQ(a.cost, 0.0);
        EXPECT_TRUE(g.nodes()[*g.find_node(a.origin)].is_rail_station);
        continue;
      }
      EXPECT_EQ(a.mode, kBus);
      EXPECT_GT(a.cost, 0.0);
      EXPECT_NEAR(a.cost, arc_operating_cost(a.frequency, a.in_motion_minutes), 0.01);
      total += a.cost;
      // Each bus arc has its reverse, so opening both keeps balance.
      bool reverse = false;
      for (const Arc& b : g.arcs()) reverse = reverse || (b.origin == a.dest && b.dest == a.origin && b.mode == kBus);
      EXPECT_TRUE(reverse) << a.id;
    }
    EXPECT_NEAR(inst.total_free_cost, total, 1e-6);
    EXPECT_NEAR(inst.suggested_budget, round_to(spec.budget_fraction * total, 0.01), 1e-9);
    for (const Trip& t : inst.population.trips()) {
      EXPECT_GE(distance(t.origin, t.dest), spec.min_trip_distance);
      EXPECT_GE(t.riders, 1);
      EXPECT_LE(t.riders, spec.max_riders);
    }
  }
}

TEST(Instgen, CarShareFollowsGradient) {
  GenSpec spec = preset_spec("medium");
  auto inst = generate(spec);
  const double mid = (spec.cols - 1) * spec.spacing / 2;
  int west = 0, west_car = 0, east = 0, east_car = 0;
  const auto car = inst.population.schema().index_of("car");
  for (const Trip& t : inst.population.trips()) {
    const bool has_car = t.context.category(car) == "yes";
    if (t.origin.x < mid) {
      ++west;
      west_car += has_car;
    } else {
      ++east;
      east_car += has_car;
    }
  }
  EXPECT_LT(static_cast<double>(west_car) / west, static_cast<double>(east_car) / east);
}

TEST(Instgen, SpecRoundTripAndOverrides) {
  GenSpec spec = preset_spec("tiny");
  apply_spec_override(spec, "trips=40");
  apply_spec_override(spec, "core.car=yes=-9.5");
  apply_spec_override(spec, "seed=77");
  EXPECT_EQ(spec.trips, 40);
  EXPECT_EQ(spec.core_weights.at("car=yes"), -9.5);
  std::istringstream in(write_spec(spec));
  auto back = read_spec(in);
  EXPECT_EQ(write_spec(back), write_spec(spec));
  EXPECT_EQ(back.seed, 77u);
  EXPECT_THROW(apply_spec_override(spec, "no_equals"), std::exception);
  EXPECT_THROW(apply_spec_override(spec, "bogus=1"), std::exception);
  EXPECT_THROW(apply_spec_override(spec, "trips=many"), std::exception);
}

TEST(Instgen, InvalidSpecsAreRejected) {
  auto bad = [](auto edit) {
    GenSpec s = preset_spec("tiny");
    edit(s);
    return s;
  };
  EXPECT_THROW(generate(bad([](GenSpec& s) { s.cols = 1, s.rows = 1; })), std::invalid_argument);
  EXPECT_THROW(generate(bad([](GenSpec& s) { s.jitter = 0.6; })), std::invalid_argument);
  EXPECT_THROW(generate(bad([](GenSpec& s) { s.car_share = 1.2; })), std::invalid_argument);
  EXPECT_THROW(generate(bad([](GenSpec& s) { s.rail_row = 9; })), std::invalid_argument);
  EXPECT_THROW(generate(bad([](GenSpec& s) { s.adopt_weights["path_total_min"] = 0.1; })), std::invalid_argument);
}

TEST(Instgen, NoRailOption) {
  GenSpec spec = preset_spec("tiny");
  spec.rail_row = -2;
  auto inst = generate(spec);
  for (const Arc& a : inst.graph.arcs()) EXPECT_FALSE(a.is_fixed);
}

TEST(Instgen, GroundTruthModelsUseNamedWeights) {
  auto m = ground_truth_model(ModelRole::core, {{"intercept", 2.0}});
  Trip t;
  t.id = "q";
  t.context.values = {10.0, 3LL, 35.0, std::string("no"), 4.0};
  EXPECT_NEAR(prob_core(m, t), 1.0 / (1.0 + std::exp(-2.0)), 1e-12);
  EXPECT_THROW(ground_truth_model(ModelRole::core, {{"nonsense", 1.0}}), SchemaError);
}
