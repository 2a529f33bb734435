#pragma once

// Out-of-sample evaluation with core-violation penalties, the FD,
// deterministic-threshold and rule-based benchmarks, and the comparison table.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "tnd/choice.hpp"
#include "tnd/demand.hpp"
#include "tnd/netmodel.hpp"
#include "tnd/optimizer/model.hpp"
#include "tnd/optimizer/solve.hpp"
#include "tnd/parallel.hpp"
#include "tnd/pathing.hpp"
#include "tnd/scenario.hpp"

namespace tnd {

struct EvalConfig {
  std::size_t scenarios = 1000;             // I'
  std::uint64_t seed = 2;
  double penalty = 1.0;                     // l_r for every trip
  std::map<std::string, double> trip_penalty;  // per-trip overrides
  unsigned threads = 1;

  double penalty_of(const std::string& trip_id) const {
    auto it = trip_penalty.find(trip_id);
    return it == trip_penalty.end() ? penalty : it->second;
  }
};

struct EvalReport {
  std::size_t scenarios = 0;
  double eval_value = 0.0;       // mean of sum e_r (u - penalty)
  double mean_coverage = 0.0;    // mean of sum e_r u
  long long violations = 0;      // (scenario, core trip) pairs without a usable path
  double mean_core = 0.0;        // trips
  double mean_latent = 0.0;
  double mean_adopted = 0.0;     // latent trips using a usable adopted path
  double adopted_pct = 0.0;      // 100 * adopted / latent
  double mean_travel_time = 0.0; // over using trips, fastest usable (adopted) path
};

namespace detail {

struct ScenarioTally {
  double value = 0.0;
  double coverage = 0.0;
  long long violations = 0;
  long long core = 0, latent = 0, adopted = 0, users = 0;
  double travel = 0.0;
};

struct UsableIndex {
  std::vector<std::vector<std::uint8_t>> usable;  // per trip, per rank
  std::vector<int> fastest;                       // first usable rank or -1

  UsableIndex(const NetworkDesign& design, const PathSet& paths) {
    usable.resize(paths.trip_count());
    fastest.assign(paths.trip_count(), -1);
    for (std::size_t r = 0; r < paths.trip_count(); ++r) {
      for (const Path& p : paths.of(r)) usable[r].push_back(path_feasible(design, p) ? 1 : 0);
      for (std::size_t k = 0; k < usable[r].size(); ++k)
        if (usable[r][k]) {
          fastest[r] = static_cast<int>(k);
          break;
        }
    }
  }
};

/// One trip in one scenario; `core` and `adopt(k)` supply the draws.
template <class AdoptFn>
void tally_trip(ScenarioTally& t, const Trip& trip, const std::vector<Path>& paths, const UsableIndex& ui,
                std::size_t r, bool core, double penalty, AdoptFn adopt) {
  const double e = static_cast<double>(trip.riders);
  if (core) {
    ++t.core;
    if (ui.fastest[r] >= 0) {
      t.value += e;
      t.coverage += e;
      ++t.users;
      t.travel += paths[static_cast<std::size_t>(ui.fastest[r])].total_minutes;
    } else {
      ++t.violations;
      t.value -= penalty * e;
    }
    return;
  }
  ++t.latent;
  for (std::size_t k = 0; k < paths.size(); ++k) {
    if (ui.usable[r][k] && adopt(k)) {
      t.value += e;
      t.coverage += e;
      ++t.adopted;
      ++t.users;
      t.travel += paths[k].total_minutes;
      return;
    }
  }
}

inline EvalReport summarize(const std::vector<ScenarioTally>& tallies) {
  EvalReport r;
  r.scenarios = tallies.size();
  if (tallies.empty()) return r;
  double travel = 0.0;
  long long users = 0, core = 0, latent = 0, adopted = 0;
  for (const auto& t : tallies) {
    r.eval_value += t.value;
    r.mean_coverage += t.coverage;
    r.violations += t.violations;
    core += t.core;
    latent += t.latent;
    adopted += t.adopted;
    users += t.users;
    travel += t.travel;
  }
  const double n = static_cast<double>(tallies.size());
  r.eval_value /= n;
  r.mean_coverage /= n;
  r.mean_core = static_cast<double>(core) / n;
  r.mean_latent = static_cast<double>(latent) / n;
  r.mean_adopted = static_cast<double>(adopted) / n;
  r.adopted_pct = latent == 0 ? 0.0 : 100.0 * static_cast<double>(adopted) / static_cast<double>(latent);
  r.mean_travel_time = users == 0 ? 0.0 : travel / static_cast<double>(users);
  return r;
}

}  // namespace detail

/// Eval(z) over I' fresh scenarios drawn from the out-of-sample stream.
inline EvalReport eval_design(const NetworkDesign& design, const TripPopulation& population, const PathSet& paths,
                              const ChoiceModel& core_model, const ChoiceModel& adopt_model, const EvalConfig& config) {
  if (config.scenarios < 1) throw std::invalid_argument("evaluation needs at least one scenario");
  if (config.penalty < 0) throw std::invalid_argument("penalty must be nonnegative");
  auto probs = compute_probabilities(population, paths, core_model, adopt_model, config.threads);
  detail::UsableIndex ui(design, paths);
  std::vector<std::uint64_t> keys;
  std::vector<double> penalty;
  for (const Trip& t : population.trips()) {
    keys.push_back(id_key(t.id));
    penalty.push_back(config.penalty_of(t.id));
  }
  std::vector<detail::ScenarioTally> tallies(config.scenarios);
  parallel_for(config.scenarios, config.threads, [&](std::size_t i) {
    auto& t = tallies[i];
    for (std::size_t r = 0; r < population.size(); ++r) {
      const bool core = draw_core(config.seed, Stream::out_of_sample, i, keys[r], probs.core[r]);
      detail::tally_trip(t, population[r], paths.of(r), ui, r, core, penalty[r], [&](std::size_t k) {
        return draw_adopt(config.seed, Stream::out_of_sample, i, keys[r], static_cast<int>(k), probs.adopt[r][k]);
      });
    }
  });
  return detail::summarize(tallies);
}

/// The same report over a fixed bundle (e.g. the solving scenarios).
inline EvalReport eval_on_bundle(const NetworkDesign& design, const TripPopulation& population, const PathSet& paths,
                                 const ScenarioBundle& bundle, double penalty = 1.0) {
  detail::UsableIndex ui(design, paths);
  std::vector<detail::ScenarioTally> tallies(bundle.size());
  for (std::size_t i = 0; i < bundle.size(); ++i) {
    const Scenario& s = bundle.scenarios[i];
    for (std::size_t r = 0; r < population.size(); ++r)
      detail::tally_trip(tallies[i], population[r], paths.of(r), ui, r, s.is_core(r), penalty,
                         [&](std::size_t k) { return s.adopt[r][k] != 0; });
  }
  return detail::summarize(tallies);
}

/// Closed-form E[Eval(z)] and the standard error of its I'-scenario mean.
struct EvalExpectation {
  double value = 0.0;
  double coverage = 0.0;
  double variance = 0.0;  // per-scenario variance of sum e_r (u - penalty)

  double standard_error(std::size_t scenarios) const { return std::sqrt(variance / static_cast<double>(scenarios)); }
};

inline EvalExpectation expected_eval(const NetworkDesign& design, const TripPopulation& population,
                                     const PathSet& paths, const ChoiceModel& core_model,
                                     const ChoiceModel& adopt_model, double penalty = 1.0) {
  auto probs = compute_probabilities(population, paths, core_model, adopt_model);
  EvalExpectation out;
  for (std::size_t r = 0; r < population.size(); ++r) {
    const double e = static_cast<double>(population[r].riders);
    std::vector<double> usable;
    for (std::size_t k = 0; k < paths.of(r).size(); ++k)
      if (path_feasible(design, paths.of(r)[k])) usable.push_back(probs.adopt[r][k]);
    const double pc = probs.core[r];
    if (usable.empty()) {
      out.value -= penalty * e * pc;
      out.variance += penalty * penalty * e * e * pc * (1 - pc);
      continue;
    }
    const double q = exact_usage_expectation(pc, usable);
    out.value += e * q;
    out.coverage += e * q;
    out.variance += e * e * q * (1 - q);
  }
  return out;
}

// --- benchmarks -------------------------------------------------------------------

/// FD: one deterministic scenario over current transit riders, each served by any usable path.
inline ScenarioBundle fixed_demand_bundle(const TripPopulation& population, const PathSet& paths) {
  ScenarioBundle b;
  b.core_fingerprint = "fixed-demand";
  b.adopt_fingerprint = "fixed-demand";
  Scenario s;
  s.core.assign(population.size(), 0);
  s.adopt.resize(population.size());
  for (std::size_t r = 0; r < population.size(); ++r)
    s.adopt[r].assign(paths.of(r).size(), population[r].current_mode == TravelMode::transit ? 1 : 0);
  b.scenarios.push_back(std::move(s));
  return b;
}

/// Deterministic: one scenario with c = [p_core >= theta] and d = [p_adopt >= theta].
inline ScenarioBundle threshold_bundle(const TripPopulation& population, const PathSet& paths,
                                       const ChoiceModel& core_model, const ChoiceModel& adopt_model,
                                       double threshold = 0.5) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must lie in [0, 1]");
  auto probs = compute_probabilities(population, paths, core_model, adopt_model);
  ScenarioBundle b;
  b.core_fingerprint = model_fingerprint(core_model);
  b.adopt_fingerprint = model_fingerprint(adopt_model);
  Scenario s;
  s.core.resize(population.size());
  s.adopt.resize(population.size());
  for (std::size_t r = 0; r < population.size(); ++r) {
    s.core[r] = probs.core[r] >= threshold ? 1 : 0;
    if (s.core[r]) continue;
    for (double q : probs.adopt[r]) s.adopt[r].push_back(q >= threshold ? 1 : 0);
  }
  b.scenarios.push_back(std::move(s));
  return b;
}

/// One method's design plus its in-sample and out-of-sample summaries.
struct BenchRow {
  std::string method;
  SolveResult solve;
  bool choice_columns = true;  // false for FD, whose solve model has no core/latent split
  EvalReport in_sample;
  double coverage = 0.0;
  std::optional<double> coverage_bound;
  EvalReport out_of_sample;
  std::size_t opened_bus_arcs = 0;
};

inline std::size_t opened_bus_arcs(const NetworkDesign& design, const TransitGraph& graph) {
  std::size_t n = 0;
  for (std::size_t a = 0; a < graph.arcs().size(); ++a)
    if (design.open[a] && !graph.arcs()[a].is_fixed && graph.arcs()[a].mode == kBus) ++n;
  return n;
}

struct BenchInputs {
  const TransitGraph* graph = nullptr;
  const TripPopulation* population = nullptr;
  const PathSet* paths = nullptr;
  const ChoiceModel* true_core = nullptr;   // evaluation models
  const ChoiceModel* true_adopt = nullptr;
  double budget = 0.0;
  SolverOptions solver;
  EvalConfig eval;
};

/// Solves on `bundle` and evaluates the design against the evaluation models.
inline BenchRow run_method(const std::string& name, const BenchInputs& in, const ScenarioBundle& bundle,
                           bool choice_columns = true) {
  BenchRow row;
  row.method = name;
  row.choice_columns = choice_columns;
  auto model = compile(*in.graph, *in.population, *in.paths, bundle, in.budget);
  row.solve = solve(model, in.solver);
  if (!row.solve.has_design) return row;
  row.opened_bus_arcs = opened_bus_arcs(row.solve.design, *in.graph);
  row.in_sample = eval_on_bundle(row.solve.design, *in.population, *in.paths, bundle, in.eval.penalty);
  row.out_of_sample =
      eval_design(row.solve.design, *in.population, *in.paths, *in.true_core, *in.true_adopt, in.eval);
  if (choice_columns) {
    row.coverage = row.solve.objective;
    row.coverage_bound = coverage_bound(bundle, *in.population);
  } else {
    row.coverage = row.out_of_sample.mean_coverage;
  }
  return row;
}

inline BenchRow benchmark_fd(const BenchInputs& in) {
  return run_method("FD", in, fixed_demand_bundle(*in.population, *in.paths), false);
}

inline BenchRow benchmark_deterministic(const BenchInputs& in, const ChoiceModel& core_model,
                                        const ChoiceModel& adopt_model, double threshold = 0.5) {
  return run_method("Deterministic", in, threshold_bundle(*in.population, *in.paths, core_model, adopt_model, threshold));
}

inline BenchRow benchmark_rulebased(const BenchInputs& in, const ChoiceModel& core_rule, const ChoiceModel& adopt_rule,
                                    std::size_t scenarios, std::uint64_t seed) {
  auto bundle = sample_scenarios(*in.population, *in.paths, core_rule, adopt_rule, scenarios, seed, in.eval.threads);
  return run_method("RB", in, bundle);
}

inline BenchRow benchmark_full(const BenchInputs& in, const ChoiceModel& core_model, const ChoiceModel& adopt_model,
                               std::size_t scenarios, std::uint64_t seed) {
  auto bundle = sample_scenarios(*in.population, *in.paths, core_model, adopt_model, scenarios, seed, in.eval.threads);
  return run_method("Full", in, bundle);
}

// --- report -------------------------------------------------------------------

inline constexpr std::string_view kReportColumns[] = {
    "method",   "status",         "run_time_s",      "opened_bus_arcs", "mean_core", "mean_latent", "adopted",
    "adopted_pct", "coverage",    "coverage_bound",  "travel_time_min", "eval",      "violations"};

inline std::vector<std::vector<std::string>> report_cells(const std::vector<BenchRow>& rows, bool omit_timing) {
  std::vector<std::vector<std::string>> out;
  auto num = [](double v) { return fmt::format("{:.2f}", v); };
  for (const BenchRow& r : rows) {
    std::vector<std::string> c;
    c.push_back(r.method);
    c.emplace_back(to_string(r.solve.status));
    c.push_back(omit_timing ? "-" : num(r.solve.wall_seconds));
    if (!r.solve.has_design) {
      while (c.size() < std::size(kReportColumns)) c.emplace_back("-");
      out.push_back(std::move(c));
      continue;
    }
    c.push_back(std::to_string(r.opened_bus_arcs));
    if (r.choice_columns) {
      c.push_back(num(r.in_sample.mean_core));
      c.push_back(num(r.in_sample.mean_latent));
      c.push_back(num(r.in_sample.mean_adopted));
      c.push_back(num(r.in_sample.adopted_pct));
    } else {
      for (int k = 0; k < 4; ++k) c.emplace_back("-");
    }
    c.push_back(num(r.coverage));
    c.push_back(r.coverage_bound ? num(*r.coverage_bound) : "-");
    c.push_back(num(r.choice_columns ? r.in_sample.mean_travel_time : r.out_of_sample.mean_travel_time));
    c.push_back(num(r.out_of_sample.eval_value));
    c.push_back(std::to_string(r.out_of_sample.violations));
    out.push_back(std::move(c));
  }
  return out;
}

inline std::string report_csv(const std::vector<BenchRow>& rows, bool omit_timing = false) {
  std::vector<std::string> header(std::begin(kReportColumns), std::end(kReportColumns));
  std::string out = join(header, ",") + "\n";
  for (const auto& cells : report_cells(rows, omit_timing)) {
    std::vector<std::string> quoted;
    for (const auto& c : cells)
      quoted.push_back(c.find_first_of(",\"\n") == std::string::npos ? c : quote_csv(c));
    out += join(quoted, ",") + "\n";
  }
  return out;
}

inline std::string report_text(const std::vector<BenchRow>& rows, bool omit_timing = false) {
  std::vector<std::vector<std::string>> table;
  table.emplace_back(std::begin(kReportColumns), std::end(kReportColumns));
  for (auto& cells : report_cells(rows, omit_timing)) table.push_back(std::move(cells));
  std::vector<std::size_t> width(table.front().size(), 0);
  for (const auto& row : table)
    for (std::size_t k = 0; k < row.size(); ++k) width[k] = std::max(width[k], row[k].size());
  std::string out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (std::size_t k = 0; k < table[i].size(); ++k) {
      if (k == 0) out += fmt::format("{:<{}}", table[i][k], width[k]);
      else out += fmt::format("  {:>{}}", table[i][k], width[k]);
    }
    out += '\n';
    if (i == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      out += std::string(total - 2, '-') + '\n';
    }
  }
  return out;
}

/// Open arcs as GeoJSON LineStrings in the instance's planar meter coordinates.
inline std::string design_geojson(const NetworkDesign& design, const TransitGraph& graph) {
  require_same_shape(design, graph);
  nlohmann::ordered_json features = nlohmann::ordered_json::array();
  for (std::size_t a = 0; a < graph.arcs().size(); ++a) {
    if (!design.open[a]) continue;
    const Arc& arc = graph.arcs()[a];
    const Point o = graph.nodes()[static_cast<std::size_t>(graph.arc_origin(static_cast<int>(a)))].position;
    const Point d = graph.nodes()[static_cast<std::size_t>(graph.arc_dest(static_cast<int>(a)))].position;
    nlohmann::ordered_json f;
    f["type"] = "Feature";
    f["geometry"] = {{"type", "LineString"}, {"coordinates", {{o.x, o.y}, {d.x, d.y}}}};
    f["properties"] = {{"id", arc.id},   {"origin", arc.origin},       {"dest", arc.dest},
                       {"mode", arc.mode}, {"frequency", arc.frequency}, {"cost", arc.cost},
                       {"fixed", arc.is_fixed}};
    features.push_back(std::move(f));
  }
  nlohmann::ordered_json doc;
  doc["type"] = "FeatureCollection";
  doc["features"] = std::move(features);
  return doc.dump(1) + "\n";
}

}  // namespace tnd
