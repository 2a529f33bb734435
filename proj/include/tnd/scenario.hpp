#pragma once

// Sample-average-approximation scenarios. Each scenario draws, for every
// trip, whether it is core (c) and, for latent trips, whether it would adopt
// each of its candidate paths (d).

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "tnd/choice.hpp"
#include "tnd/choice_io.hpp"
#include "tnd/demand.hpp"
#include "tnd/parallel.hpp"
#include "tnd/pathing.hpp"
#include "tnd/rng.hpp"

namespace tnd {

/// Model probabilities evaluated once per trip and per candidate path.
struct ChoiceProbabilities {
  std::vector<double> core;                // per trip
  std::vector<std::vector<double>> adopt;  // per trip, per path rank
};

inline ChoiceProbabilities compute_probabilities(const TripPopulation& population, const PathSet& paths,
                                                 const ChoiceModel& core_model, const ChoiceModel& adopt_model,
                                                 unsigned threads = 1) {
  if (paths.trip_count() != population.size()) throw StructuralError("path set does not match the population");
  ChoiceProbabilities probs;
  probs.core.resize(population.size());
  probs.adopt.resize(population.size());
  parallel_for(population.size(), threads, [&](std::size_t r) {
    probs.core[r] = prob_core(core_model, population[r]);
    for (const Path& p : paths.of(r)) probs.adopt[r].push_back(prob_adopt(adopt_model, population[r], p.id, p.features()));
  });
  return probs;
}

/// Draw coordinates shared by in-sample sampling and streamed evaluation:
/// slot 0 is the core draw, slot k+1 the adoption draw of the rank-k path.
inline bool draw_core(std::uint64_t seed, Stream stream, std::uint64_t scenario, std::uint64_t trip_key, double p) {
  return bernoulli_at(seed, stream, scenario, trip_key, 0, p);
}
inline bool draw_adopt(std::uint64_t seed, Stream stream, std::uint64_t scenario, std::uint64_t trip_key, int rank,
                       double p) {
  return bernoulli_at(seed, stream, scenario, trip_key, static_cast<std::uint64_t>(rank) + 1, p);
}

struct Scenario {
  std::vector<std::uint8_t> core;                 // c_r per trip
  std::vector<std::vector<std::uint8_t>> adopt;   // d_{r,p} per trip and path rank; empty for core trips

  bool is_core(std::size_t r) const { return core[r] != 0; }
  /// Latent trip that rejects every candidate path; it can never use transit in this scenario.
  bool prunable(std::size_t r) const {
    if (core[r]) return false;
    for (auto d : adopt[r])
      if (d) return false;
    return true;
  }
  std::size_t core_count() const {
    std::size_t n = 0;
    for (auto c : core) n += c;
    return n;
  }
};

struct ScenarioBundle {
  std::uint64_t seed = 0;
  Stream stream = Stream::in_sample;
  std::string core_fingerprint;
  std::string adopt_fingerprint;
  std::vector<Scenario> scenarios;

  std::size_t size() const { return scenarios.size(); }
  /// Seed of scenario i's stream family (informational; draws are keyed by (seed, i, trip, slot)).
  std::uint64_t scenario_seed(std::size_t i) const { return stream_key(seed, stream, i, 0, 0); }
};

/// (scenario, trip) pairs where a core trip has no candidate path at all; such
/// a bundle makes the design model infeasible regardless of the design.
inline std::vector<std::pair<std::size_t, std::size_t>> pre_infeasibility(const ScenarioBundle& bundle,
                                                                          const PathSet& paths) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < bundle.size(); ++i)
    for (std::size_t r = 0; r < paths.trip_count(); ++r)
      if (bundle.scenarios[i].is_core(r) && paths.of(r).empty()) out.emplace_back(i, r);
  return out;
}

/// Latent trips per scenario that reject all their paths.
inline std::vector<std::vector<std::size_t>> pruning_report(const ScenarioBundle& bundle) {
  std::vector<std::vector<std::size_t>> out(bundle.size());
  for (std::size_t i = 0; i < bundle.size(); ++i)
    for (std::size_t r = 0; r < bundle.scenarios[i].core.size(); ++r)
      if (bundle.scenarios[i].prunable(r)) out[i].push_back(r);
  return out;
}

inline Scenario draw_scenario(const TripPopulation& population, const ChoiceProbabilities& probs, std::uint64_t seed,
                              Stream stream, std::size_t i) {
  Scenario s;
  s.core.resize(population.size());
  s.adopt.resize(population.size());
  for (std::size_t r = 0; r < population.size(); ++r) {
    const auto key = id_key(population[r].id);
    s.core[r] = draw_core(seed, stream, i, key, probs.core[r]) ? 1 : 0;
    if (s.core[r]) continue;
    const auto& q = probs.adopt[r];
    s.adopt[r].resize(q.size());
    for (std::size_t k = 0; k < q.size(); ++k)
      s.adopt[r][k] = draw_adopt(seed, stream, i, key, static_cast<int>(k), q[k]) ? 1 : 0;
  }
  return s;
}

inline ScenarioBundle sample_scenarios(const TripPopulation& population, const PathSet& paths,
                                       const ChoiceModel& core_model, const ChoiceModel& adopt_model,
                                       std::size_t count, std::uint64_t seed, unsigned threads = 1) {
  if (count < 1) throw std::invalid_argument("at least one scenario is required");
  auto probs = compute_probabilities(population, paths, core_model, adopt_model, threads);
  ScenarioBundle bundle;
  bundle.seed = seed;
  bundle.core_fingerprint = model_fingerprint(core_model);
  bundle.adopt_fingerprint = model_fingerprint(adopt_model);
  bundle.scenarios.resize(count);
  parallel_for(count, threads, [&](std::size_t i) {
    bundle.scenarios[i] = draw_scenario(population, probs, seed, bundle.stream, i);
  });
  return bundle;
}

/// Sum over scenarios of riders that could use transit if every arc were open.
inline long long coverage_bound_total(const ScenarioBundle& bundle, const TripPopulation& population) {
  long long total = 0;
  for (const Scenario& s : bundle.scenarios)
    for (std::size_t r = 0; r < population.size(); ++r)
      if (!s.prunable(r)) total += population[r].riders;
  return total;
}

/// Mean riders per scenario reachable with an unlimited budget.
inline double coverage_bound(const ScenarioBundle& bundle, const TripPopulation& population) {
  if (bundle.size() == 0) throw std::invalid_argument("coverage bound needs a nonempty bundle");
  return static_cast<double>(coverage_bound_total(bundle, population)) / static_cast<double>(bundle.size());
}

// --- scenario file --------------------------------------------------------------

inline std::string write_scenarios(const ScenarioBundle& bundle, const TripPopulation& population,
                                   const PathSet& paths, Provenance provenance = {}) {
  provenance.set("seed", std::to_string(bundle.seed));
  provenance.set("scenarios", std::to_string(bundle.size()));
  provenance.set("core_model", bundle.core_fingerprint);
  provenance.set("adopt_model", bundle.adopt_fingerprint);
  std::string out = provenance.render();
  for (std::size_t i = 0; i < bundle.size(); ++i) {
    const Scenario& s = bundle.scenarios[i];
    for (std::size_t r = 0; r < population.size(); ++r) {
      out += fmt::format("{},{},{}\n", i, population[r].id, s.core[r]);
      if (s.core[r]) continue;
      for (std::size_t k = 0; k < s.adopt[r].size(); ++k)
        out += fmt::format("{},{},{},{}\n", i, population[r].id, paths.of(r)[k].id, s.adopt[r][k]);
    }
  }
  return out;
}

inline ScenarioBundle read_scenarios(std::istream& in, const TripPopulation& population, const PathSet& paths) {
  LineReader reader(in);
  std::string line;
  std::vector<std::vector<std::int8_t>> core;  // -1 = not yet seen
  std::vector<std::vector<std::vector<std::int8_t>>> adopt;
  auto ensure = [&](std::size_t i) {
    while (core.size() <= i) {
      core.emplace_back(population.size(), -1);
      adopt.emplace_back(population.size());
    }
  };
  while (reader.next(line)) {
    const auto n = reader.line_no();
    auto f = split_csv(line, n);
    if (f.size() != 3 && f.size() != 4) throw ParseError("scenario rows have 3 (core) or 4 (adopt) fields", n);
    auto i = static_cast<std::size_t>(parse_int(f[0], n));
    auto r = population.find(f[1]);
    if (!r) throw ParseError(fmt::format("unknown trip '{}'", f[1]), n);
    ensure(i);
    if (f.size() == 3) {
      if (core[i][*r] != -1) throw ParseError("duplicate core row", n);
      core[i][*r] = parse_flag(f[2], n) ? 1 : 0;
    } else {
      const auto& tp = paths.of(*r);
      std::size_t k = 0;
      while (k < tp.size() && tp[k].id != f[2]) ++k;
      if (k == tp.size()) throw ParseError(fmt::format("trip '{}' has no path '{}'", f[1], f[2]), n);
      auto& row = adopt[i][*r];
      if (row.empty()) row.assign(tp.size(), -1);
      if (row[k] != -1) throw ParseError("duplicate adoption row", n);
      row[k] = parse_flag(f[3], n) ? 1 : 0;
    }
  }
  ScenarioBundle bundle;
  const auto& prov = reader.provenance;
  if (auto v = prov.find("seed")) bundle.seed = static_cast<std::uint64_t>(std::stoull(*v));
  if (auto v = prov.find("core_model")) bundle.core_fingerprint = *v;
  if (auto v = prov.find("adopt_model")) bundle.adopt_fingerprint = *v;
  if (auto v = prov.find("scenarios")) ensure(static_cast<std::size_t>(parse_int(*v)) - 1);
  for (std::size_t i = 0; i < core.size(); ++i) {
    Scenario s;
    s.core.resize(population.size());
    s.adopt.resize(population.size());
    for (std::size_t r = 0; r < population.size(); ++r) {
      if (core[i][r] == -1)
        throw ParseError(fmt::format("scenario {} lacks a core row for trip '{}'", i, population[r].id));
      s.core[r] = static_cast<std::uint8_t>(core[i][r]);
      const auto& row = adopt[i][r];
      if (s.core[r]) {
        if (!row.empty())
          throw ParseError(fmt::format("scenario {} has adoption rows for core trip '{}'", i, population[r].id));
        continue;
      }
      if (row.size() != paths.of(r).size())
        throw ParseError(fmt::format("scenario {} adoption rows do not cover trip '{}'", i, population[r].id));
      for (auto d : row) {
        if (d == -1) throw ParseError(fmt::format("scenario {} adoption rows do not cover trip '{}'", i, population[r].id));
        s.adopt[r].push_back(static_cast<std::uint8_t>(d));
      }
    }
    bundle.scenarios.push_back(std::move(s));
  }
  return bundle;
}

inline ScenarioBundle load_scenarios(const std::filesystem::path& file, const TripPopulation& population,
                                     const PathSet& paths) {
  auto in = open_input(file);
  return read_scenarios(in, population, paths);
}

}  // namespace tnd
