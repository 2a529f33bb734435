#pragma once

// In-sample objective of a design recomputed from the raw scenarios, without
// the compiled model: f from path feasibility, d as the OR of usable adopted
// paths, u = 1 for core trips.

#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "tnd/errors.hpp"
#include "tnd/pathing.hpp"
#include "tnd/scenario.hpp"

namespace tnd {

struct InSampleReplay {
  long long count = 0;     // sum over scenarios of riders using transit
  double objective = 0.0;  // count / I
  std::vector<std::pair<int, int>> violations;  // (scenario, trip) core pairs without a usable path
};

inline InSampleReplay replay_in_sample(const NetworkDesign& design, const TripPopulation& population,
                                       const PathSet& paths, const ScenarioBundle& bundle) {
  if (paths.trip_count() != population.size()) throw StructuralError("path set does not match the population");
  InSampleReplay out;
  std::vector<std::vector<std::uint8_t>> usable(population.size());
  for (std::size_t r = 0; r < population.size(); ++r)
    for (const Path& p : paths.of(r)) usable[r].push_back(path_feasible(design, p) ? 1 : 0);
  for (std::size_t i = 0; i < bundle.size(); ++i) {
    const Scenario& s = bundle.scenarios[i];
    for (std::size_t r = 0; r < population.size(); ++r) {
      bool any = false;
      if (s.is_core(r)) {
        for (auto f : usable[r]) any = any || f;
        if (!any) out.violations.emplace_back(static_cast<int>(i), static_cast<int>(r));
        out.count += population[r].riders;
        continue;
      }
      for (std::size_t k = 0; k < usable[r].size(); ++k) any = any || (usable[r][k] && s.adopt[r][k]);
      if (any) out.count += population[r].riders;
    }
  }
  out.objective = bundle.size() == 0 ? 0.0 : static_cast<double>(out.count) / static_cast<double>(bundle.size());
  return out;
}

/// The in-sample objective; throws when a core trip is left without a usable path.
inline double evaluate_in_sample(const NetworkDesign& design, const TripPopulation& population, const PathSet& paths,
                                 const ScenarioBundle& bundle) {
  auto replay = replay_in_sample(design, population, paths, bundle);
  if (!replay.violations.empty()) {
    std::string list;
    for (std::size_t k = 0; k < replay.violations.size() && k < 10; ++k)
      list += fmt::format("{}({}, {})", k ? " " : "", replay.violations[k].first,
                          population[static_cast<std::size_t>(replay.violations[k].second)].id);
    throw InfeasibleError(fmt::format("{} core trip-scenarios have no usable path: {}", replay.violations.size(), list));
  }
  return replay.objective;
}

}  // namespace tnd
