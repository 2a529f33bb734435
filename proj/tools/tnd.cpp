// tnd: staged command-line pipeline. Every subcommand reads its inputs from a
// run directory and writes its outputs there, with provenance headers and a
// manifest of artifact hashes.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "tnd/choice_io.hpp"
#include "tnd/evalbench.hpp"
#include "tnd/instgen.hpp"
#include "tnd/labels.hpp"
#include "tnd/logit.hpp"
#include "tnd/netmodel_io.hpp"
#include "tnd/optimizer/export.hpp"
#include "tnd/optimizer/replay.hpp"
#include "tnd/optimizer/solve.hpp"
#include "tnd/pathing.hpp"
#include "tnd/scenario.hpp"

namespace fs = std::filesystem;
using namespace tnd;

namespace {

constexpr std::string_view kVersion = "0.1.0";

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kInfeasible = 3, kTimeout = 4, kMissing = 5 };

class MissingArtifact : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TimeoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const std::map<std::string, std::string, std::less<>> kProducers = {
    {"nodes.csv", "gen"},        {"arcs.csv", "gen"},           {"trips.csv", "gen"},
    {"core_truth.model", "gen"}, {"adopt_truth.model", "gen"},  {"paths.csv", "paths"},
    {"labels_core.csv", "label"}, {"labels_adopt.csv", "label"}, {"core.model", "train"},
    {"adopt.model", "train"},    {"scenarios.csv", "sample"},   {"design.csv", "solve"}};

struct Run {
  fs::path dir = "run";
  unsigned threads = 1;
  std::string command;
  std::vector<std::string> args;  // recorded in provenance; excludes --run and --threads

  /// Path of an input artifact. Bare file names live in the run directory.
  fs::path input(const std::string& name) const {
    fs::path p = name;
    if (!p.has_parent_path()) p = dir / p;
    if (!fs::exists(p)) {
      auto it = kProducers.find(p.filename().string());
      if (it != kProducers.end())
        throw MissingArtifact(fmt::format("missing '{}'; run `tnd {} --run {}` first", p.string(), it->second,
                                          dir.string()));
      throw MissingArtifact(fmt::format("missing '{}'", p.string()));
    }
    return p;
  }

  Provenance provenance(const std::vector<fs::path>& inputs) const {
    Provenance prov;
    prov.set("tool", fmt::format("tnd {}", kVersion));
    prov.set("command", command);
    prov.set("args", join(args, " "));
    for (const auto& in : inputs) prov.set("input." + in.filename().string(), file_fingerprint(in));
    return prov;
  }

  void write(const std::string& name, std::string_view content) const {
    write_file(dir / name, content);
    record(name);
  }

  /// manifest.txt: `artifact,hash,command args` per produced file, sorted by name.
  void record(const std::string& name) const {
    const fs::path manifest = dir / "manifest.txt";
    std::map<std::string, std::string> rows;
    if (fs::exists(manifest)) {
      auto in = open_input(manifest);
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto comma = line.find(',');
        if (comma != std::string::npos) rows[line.substr(0, comma)] = line.substr(comma + 1);
      }
    }
    std::string cmd = command;
    for (const auto& a : args) cmd += " " + a;
    rows[name] = fmt::format("{},{}", file_fingerprint(dir / name), cmd);
    std::string out = "# artifact,fnv1a64,command\n";
    for (const auto& [k, v] : rows) out += k + "," + v + "\n";
    write_file(manifest, out);
  }
};

struct Loaded {
  TransitGraph graph;
  TripPopulation population;
  PathSet paths;
  Provenance arcs_provenance;
  std::vector<fs::path> inputs;
};

Loaded load_network(const Run& run, bool with_paths) {
  Loaded l;
  auto nodes = run.input("nodes.csv"), arcs = run.input("arcs.csv"), trips = run.input("trips.csv");
  {
    auto nin = open_input(nodes);
    auto ain = open_input(arcs);
    auto node_list = read_nodes(nin);
    auto arc_list = read_arcs(ain, &l.arcs_provenance);
    l.graph = TransitGraph(std::move(node_list), std::move(arc_list));
  }
  l.population = load_trips(trips);
  l.inputs = {nodes, arcs, trips};
  if (with_paths) {
    auto p = run.input("paths.csv");
    l.paths = load_paths(p, l.graph, l.population);
    l.inputs.push_back(p);
  }
  return l;
}

ChoiceModel load_role_model(const Run& run, const std::string& name, ModelRole role, std::vector<fs::path>& inputs) {
  auto p = run.input(name);
  ChoiceModel m = load_model(p);
  if (m.role != role)
    throw SchemaError(fmt::format("'{}' is a {} model, expected {}", p.string(), to_string(m.role), to_string(role)));
  inputs.push_back(p);
  return m;
}

double resolve_budget(const std::optional<double>& budget, const Provenance& arcs_provenance) {
  if (budget) return *budget;
  if (const std::string* b = arcs_provenance.find("suggested_budget")) return parse_double(*b);
  throw std::invalid_argument("no --budget given and arcs.csv records no suggested_budget");
}

void print_witnesses(const SolveResult& r, const TripPopulation& population) {
  if (!r.message.empty()) fmt::print(stderr, "{}\n", r.message);
  std::size_t shown = 0;
  for (auto [i, t] : r.witnesses) {
    if (++shown > 10) break;
    fmt::print(stderr, "  scenario {} trip {}: core but no path fits the budget\n", i,
               population[static_cast<std::size_t>(t)].id);
  }
}

// --- gen ---------------------------------------------------------------------

struct GenArgs {
  std::string preset = "small";
  std::string spec_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
};

int cmd_gen(const Run& run, const GenArgs& a) {
  GenSpec spec;
  if (!a.spec_file.empty()) {
    auto in = open_input(a.spec_file);
    spec = read_spec(in, a.preset);
  } else {
    spec = preset_spec(a.preset);
  }
  for (const auto& s : a.sets) apply_spec_override(spec, s);
  if (a.seed) spec.seed = *a.seed;
  Instance inst = generate(spec);

  Provenance prov = run.provenance({});
  prov.set("preset", spec.preset);
  prov.set("seed", std::to_string(spec.seed));
  Provenance arcs_prov = prov;
  arcs_prov.set("total_free_cost", format_double(inst.total_free_cost));
  arcs_prov.set("suggested_budget", format_double(inst.suggested_budget));
  run.write("gen_spec.txt", prov.render() + write_spec(spec));
  run.write("nodes.csv", write_nodes(inst.graph.nodes(), prov));
  run.write("arcs.csv", write_arcs(inst.graph.arcs(), arcs_prov));
  run.write("trips.csv", write_trips(inst.population, prov));
  run.write("core_truth.model", write_model(inst.core_truth, prov));
  run.write("adopt_truth.model", write_model(inst.adopt_truth, prov));
  fmt::print("generated {} stops, {} arcs ({} free), {} trips; suggested budget {}\n", inst.graph.nodes().size(),
             inst.graph.arcs().size(),
             std::count_if(inst.graph.arcs().begin(), inst.graph.arcs().end(), [](const Arc& x) { return !x.is_fixed; }),
             inst.population.size(), format_double(inst.suggested_budget));
  return kOk;
}

// --- paths -------------------------------------------------------------------

int cmd_paths(const Run& run, PathingConfig config) {
  config.threads = run.threads;
  Loaded l = load_network(run, false);
  auto ag = build_access_graph(l.graph, l.population, config);
  PathSet paths = enumerate_all_paths(ag, l.population);
  Provenance prov = run.provenance(l.inputs);
  prov.set("w", std::to_string(config.paths_per_trip));
  prov.set("k_access", std::to_string(config.k_access));
  prov.set("walk_speed", format_double(config.walk_speed));
  prov.set("walk_cap_minutes", format_double(config.walk_cap_minutes));
  run.write("paths.csv", write_paths(paths, l.graph, prov));
  std::size_t empty = 0;
  for (std::size_t r = 0; r < paths.trip_count(); ++r) empty += paths.of(r).empty() ? 1 : 0;
  fmt::print("{} paths for {} trips (w = {}, k_access = {}); {} trips without a path, {} walk-only trips\n",
             paths.path_count(), paths.trip_count(), config.paths_per_trip, config.k_access, empty,
             walk_only_trips(paths).size());
  return kOk;
}

// --- label / train -------------------------------------------------------------

std::vector<ModelRole> roles_of(const std::string& role) {
  if (role == "core") return {ModelRole::core};
  if (role == "adopt") return {ModelRole::adopt};
  if (role == "both") return {ModelRole::core, ModelRole::adopt};
  throw std::invalid_argument(fmt::format("unknown role '{}' (core, adopt, both)", role));
}

struct LabelArgs {
  std::string role = "both";
  std::uint64_t seed = 3;
  std::string core_model = "core_truth.model";
  std::string adopt_model = "adopt_truth.model";
};

int cmd_label(const Run& run, const LabelArgs& a) {
  Loaded l = load_network(run, true);
  for (ModelRole role : roles_of(a.role)) {
    std::vector<fs::path> inputs = l.inputs;
    ChoiceModel m = load_role_model(run, role == ModelRole::core ? a.core_model : a.adopt_model, role, inputs);
    LabeledDataset data = simulate_labels(role, l.population, l.paths, m, a.seed);
    Provenance prov = run.provenance(inputs);
    prov.set("seed", std::to_string(a.seed));
    const std::string name = fmt::format("labels_{}.csv", to_string(role));
    run.write(name, write_labels(data, role, prov));
    std::size_t pos = 0;
    for (const auto& r : data.rows) pos += r.label ? 1 : 0;
    fmt::print("{}: {} rows, {} positive\n", name, data.rows.size(), pos);
  }
  return kOk;
}

struct TrainArgs {
  std::string role = "both";
  std::string labels;
  int folds = 5;
  std::uint64_t seed = 0;
};

int cmd_train(const Run& run, const TrainArgs& a) {
  auto roles = roles_of(a.role);
  if (!a.labels.empty() && roles.size() != 1) throw std::invalid_argument("--labels needs --role core or --role adopt");
  for (ModelRole role : roles) {
    auto file = run.input(a.labels.empty() ? fmt::format("labels_{}.csv", to_string(role)) : a.labels);
    LabelFile labels = load_labels(file);
    if (labels.role != role)
      throw SchemaError(fmt::format("'{}' holds {} labels, expected {}", file.string(), to_string(labels.role),
                                    to_string(role)));
    const LogitGrid grid = role == ModelRole::core ? LogitGrid::for_core() : LogitGrid::for_adopt();
    TrainResult result = train_logit(labels.data, grid, a.folds, a.seed);
    Provenance prov = run.provenance({file});
    prov.set("seed", std::to_string(a.seed));
    prov.set("folds", std::to_string(a.folds));
    run.write(fmt::format("{}.model", to_string(role)), write_model({role, result.model}, prov));

    std::string cv = prov.render() + "l2_c,class_weight,max_iterations,mean_score";
    for (int f = 0; f < a.folds; ++f) cv += fmt::format(",fold{}", f);
    cv += '\n';
    for (const auto& e : result.report.entries) {
      cv += fmt::format("{},{},{},{:.6f}", format_double(e.l2_c), format_double(e.class_weight), e.max_iterations,
                        e.mean_score);
      for (double s : e.fold_scores) cv += fmt::format(",{:.6f}", s);
      cv += '\n';
    }
    run.write(fmt::format("cv_{}.csv", to_string(role)), cv);

    std::vector<bool> truth;
    std::vector<double> scores;
    for (const auto& r : labels.data.rows) {
      truth.push_back(r.label);
      scores.push_back(result.model.probability(r.context, r.path ? &*r.path : nullptr));
    }
    const CvEntry& best = result.report.entries[result.report.best];
    fmt::print("{}.model: C = {}, class weight {}, {} iterations; cv score {:.4f}; training AUC {:.4f}\n",
               to_string(role), format_double(best.l2_c), format_double(best.class_weight), best.max_iterations,
               best.mean_score, roc_auc(truth, scores));
  }
  return kOk;
}

// --- sample ------------------------------------------------------------------

struct SampleArgs {
  std::size_t scenarios = 50;
  std::uint64_t seed = 1;
  std::string core_model = "core_truth.model";
  std::string adopt_model = "adopt_truth.model";
};

int cmd_sample(const Run& run, const SampleArgs& a) {
  Loaded l = load_network(run, true);
  std::vector<fs::path> inputs = l.inputs;
  ChoiceModel core = load_role_model(run, a.core_model, ModelRole::core, inputs);
  ChoiceModel adopt = load_role_model(run, a.adopt_model, ModelRole::adopt, inputs);
  ScenarioBundle bundle = sample_scenarios(l.population, l.paths, core, adopt, a.scenarios, a.seed, run.threads);
  run.write("scenarios.csv", write_scenarios(bundle, l.population, l.paths, run.provenance(inputs)));
  auto bad = pre_infeasibility(bundle, l.paths);
  double core_total = 0;
  for (const auto& s : bundle.scenarios) core_total += static_cast<double>(s.core_count());
  fmt::print("{} scenarios; mean core trips {:.2f}; coverage bound {:.2f}\n", bundle.size(),
             core_total / static_cast<double>(bundle.size()), coverage_bound(bundle, l.population));
  if (!bad.empty()) {
    fmt::print(stderr, "{} (scenario, trip) pairs are core without any candidate path; the model is infeasible\n",
               bad.size());
    for (std::size_t k = 0; k < std::min<std::size_t>(bad.size(), 10); ++k)
      fmt::print(stderr, "  scenario {} trip {}\n", bad[k].first, l.population[bad[k].second].id);
  }
  return kOk;
}

// --- solve / verify ------------------------------------------------------------

struct SolveArgs {
  std::string solver = "heuristic";
  std::optional<double> budget;
  double time_limit = 60.0;
  std::uint64_t seed = 1;
  int iterations = 200;
  int portfolio = 1;
  std::string format = "lp";
};

struct Compiled {
  Loaded loaded;
  ScenarioBundle bundle;
  CompiledModel model;
  std::vector<fs::path> inputs;
};

Compiled compile_run(const Run& run, const std::optional<double>& budget) {
  Compiled c;
  c.loaded = load_network(run, true);
  auto sc = run.input("scenarios.csv");
  c.bundle = load_scenarios(sc, c.loaded.population, c.loaded.paths);
  c.inputs = c.loaded.inputs;
  c.inputs.push_back(sc);
  c.model = compile(c.loaded.graph, c.loaded.population, c.loaded.paths, c.bundle,
                    resolve_budget(budget, c.loaded.arcs_provenance));
  return c;
}

void write_solution_design(const Run& run, const Compiled& c, const NetworkDesign& design, Provenance prov,
                           double objective) {
  prov.set("budget", format_double(c.model.budget));
  prov.set("objective", format_double(objective));
  prov.set("cost", format_double(budget_cost(design, c.loaded.graph)));
  run.write("design.csv", write_design(design, c.loaded.graph, prov));
}

int cmd_solve(const Run& run, const SolveArgs& a) {
  Compiled c = compile_run(run, a.budget);
  const CompiledModel& m = c.model;
  fmt::print("model: {} free arcs, {} paths, {} adoption terms, {} core rows, budget {}\n", m.free_arcs.size(),
             m.paths.size(), m.entries.size(), m.core.size(), format_double(m.budget));
  if (a.solver == "export") {
    Provenance prov = run.provenance(c.inputs);
    prov.set("budget", format_double(m.budget));
    if (a.format == "lp") run.write("model.lp", write_lp(m, prov));
    else if (a.format == "opb") run.write("model.opb", write_opb(m, prov));
    else throw std::invalid_argument(fmt::format("unknown export format '{}' (lp, opb)", a.format));
    fmt::print("wrote model.{} with {} variables\n", a.format, m.variable_count());
    return kOk;
  }
  SolverOptions opts;
  opts.kind = parse_solver_kind(a.solver);
  opts.time_limit_s = a.time_limit;
  opts.seed = a.seed;
  opts.iterations = a.iterations;
  opts.portfolio_size = a.portfolio;
  opts.threads = run.threads;
  SolveResult r = solve(m, opts);
  if (!r.has_design) {
    print_witnesses(r, c.loaded.population);
    if (r.status == SolveStatus::timeout) throw TimeoutError("time limit reached without a feasible design");
    throw InfeasibleError("no feasible design");
  }
  Provenance prov = run.provenance(c.inputs);
  prov.set("solver", a.solver);
  prov.set("seed", std::to_string(a.seed));
  prov.set("status", std::string(to_string(r.status)));
  write_solution_design(run, c, r.design, prov, r.objective);
  std::string report = prov.render();
  report += fmt::format("status={}\nobjective={}\nobjective_count={}\nbound={}\ncost={}\nopened_bus_arcs={}\n",
                        to_string(r.status), format_double(r.objective), r.objective_count, format_double(r.bound),
                        format_double(budget_cost(r.design, c.loaded.graph)),
                        opened_bus_arcs(r.design, c.loaded.graph));
  report += fmt::format("nodes={}\niterations={}\n", r.stats.nodes, r.stats.iterations);
  run.write("solve.txt", report);
  fmt::print("{}: objective {} (bound {}), {} bus arcs open, {:.2f} s\n", to_string(r.status),
             format_double(r.objective), format_double(r.bound), opened_bus_arcs(r.design, c.loaded.graph),
             r.wall_seconds);
  return kOk;
}

struct VerifyArgs {
  std::string solution;
  std::optional<double> budget;
};

int cmd_verify(const Run& run, const VerifyArgs& a) {
  Compiled c = compile_run(run, a.budget);
  fs::path sol = a.solution;
  if (!fs::exists(sol)) throw MissingArtifact(fmt::format("missing solution file '{}'", sol.string()));
  auto in = open_input(sol);
  auto values = read_solution(in, c.model);
  VerificationReport rep = verify_solution(values, c.model);
  if (!rep.accepted()) {
    for (const auto& f : rep.violated_families) fmt::print(stderr, "violated: {}\n", f);
    for (const auto& f : rep.feasibility.violated_families()) fmt::print(stderr, "design check: {}\n", f);
    for (const auto& r : rep.violated_rows) fmt::print(stderr, "  row {}\n", r);
    fmt::print(stderr, "{} violated rows\n", rep.violated_count);
    return kInfeasible;
  }
  auto inputs = c.inputs;
  inputs.push_back(sol);
  Provenance prov = run.provenance(inputs);
  prov.set("solver", "imported");
  write_solution_design(run, c, rep.design, prov, rep.objective);
  fmt::print("solution accepted: objective {}\n", format_double(rep.objective));
  return kOk;
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
  std::string design = "design.csv";
  std::size_t scenarios = 1000;
  std::uint64_t seed = 2;
  double penalty = 1.0;
  std::string core_model = "core_truth.model";
  std::string adopt_model = "adopt_truth.model";
  bool geojson = false;
};

std::string eval_lines(const EvalReport& e) {
  return fmt::format(
      "scenarios={}\neval={:.6f}\ncoverage={:.6f}\nviolations={}\nmean_core={:.6f}\nmean_latent={:.6f}\n"
      "adopted={:.6f}\nadopted_pct={:.4f}\ntravel_time_min={:.4f}\n",
      e.scenarios, e.eval_value, e.mean_coverage, e.violations, e.mean_core, e.mean_latent, e.mean_adopted,
      e.adopted_pct, e.mean_travel_time);
}

int cmd_eval(const Run& run, const EvalArgs& a) {
  Loaded l = load_network(run, true);
  std::vector<fs::path> inputs = l.inputs;
  auto dfile = run.input(a.design);
  inputs.push_back(dfile);
  NetworkDesign design;
  {
    auto in = open_input(dfile);
    design = read_design(in, l.graph);
  }
  ChoiceModel core = load_role_model(run, a.core_model, ModelRole::core, inputs);
  ChoiceModel adopt = load_role_model(run, a.adopt_model, ModelRole::adopt, inputs);
  EvalConfig cfg;
  cfg.scenarios = a.scenarios;
  cfg.seed = a.seed;
  cfg.penalty = a.penalty;
  cfg.threads = run.threads;

  std::string body;
  const fs::path sc = run.dir / "scenarios.csv";
  if (fs::exists(sc)) {
    ScenarioBundle bundle = load_scenarios(sc, l.population, l.paths);
    inputs.push_back(sc);
    InSampleReplay replay = replay_in_sample(design, l.population, l.paths, bundle);
    body += fmt::format("in_sample_objective={}\nin_sample_violations={}\n", format_double(replay.objective),
                        replay.violations.size());
    fmt::print("in-sample objective {} over {} scenarios, {} core violations\n", format_double(replay.objective),
               bundle.size(), replay.violations.size());
  }
  auto feas = check_design_feasibility(design, l.graph, std::numeric_limits<double>::infinity());
  if (!feas.feasible())
    for (const auto& f : feas.violated_families()) fmt::print(stderr, "warning: design violates {}\n", f);
  EvalReport e = eval_design(design, l.population, l.paths, core, adopt, cfg);
  Provenance prov = run.provenance(inputs);
  prov.set("seed", std::to_string(a.seed));
  run.write("eval.txt", prov.render() + body + eval_lines(e));
  if (a.geojson) run.write("design.geojson", design_geojson(design, l.graph));
  fmt::print("out-of-sample ({} scenarios): coverage {:.3f}, eval {:.3f}, {} violations, {:.2f}% latent adopted\n",
             e.scenarios, e.mean_coverage, e.eval_value, e.violations, e.adopted_pct);
  return kOk;
}

// --- bench -------------------------------------------------------------------

struct BenchArgs {
  std::size_t scenarios = 50;
  std::size_t eval_scenarios = 1000;
  std::uint64_t sample_seed = 1;
  std::uint64_t eval_seed = 2;
  std::optional<double> budget;
  std::string solver = "heuristic";
  double time_limit = 60.0;
  int iterations = 200;
  double threshold = 0.5;
  double rule_walk = 5.0;
  double rule_p_near = 0.8;
  double rule_p_far = 0.2;
  double penalty = 1.0;
  std::string core_model = "core_truth.model";
  std::string adopt_model = "adopt_truth.model";
  std::string eval_core_model = "core_truth.model";
  std::string eval_adopt_model = "adopt_truth.model";
  std::vector<std::string> methods{"FD", "RB", "Deterministic", "Full"};
  bool omit_timing = false;
};

int cmd_bench(const Run& run, const BenchArgs& a) {
  Loaded l = load_network(run, true);
  std::vector<fs::path> inputs = l.inputs;
  ChoiceModel core = load_role_model(run, a.core_model, ModelRole::core, inputs);
  ChoiceModel adopt = load_role_model(run, a.adopt_model, ModelRole::adopt, inputs);
  ChoiceModel eval_core = load_role_model(run, a.eval_core_model, ModelRole::core, inputs);
  ChoiceModel eval_adopt = load_role_model(run, a.eval_adopt_model, ModelRole::adopt, inputs);

  BenchInputs in;
  in.graph = &l.graph;
  in.population = &l.population;
  in.paths = &l.paths;
  in.true_core = &eval_core;
  in.true_adopt = &eval_adopt;
  in.budget = resolve_budget(a.budget, l.arcs_provenance);
  in.solver.kind = parse_solver_kind(a.solver);
  in.solver.time_limit_s = a.time_limit;
  in.solver.iterations = a.iterations;
  in.solver.threads = run.threads;
  in.eval.scenarios = a.eval_scenarios;
  in.eval.seed = a.eval_seed;
  in.eval.penalty = a.penalty;
  in.eval.threads = run.threads;

  StationProximityRule rule;
  rule.walk_minutes = a.rule_walk;
  rule.p_near = a.rule_p_near;
  rule.p_far = a.rule_p_far;
  for (const Node& n : l.graph.nodes())
    if (n.is_rail_station) rule.stations.push_back(n.position);
  const ChoiceModel core_rule{ModelRole::core, rule};
  const ChoiceModel adopt_rule{ModelRole::adopt, TravelTimeRule{}};

  std::vector<BenchRow> rows;
  for (const auto& method : a.methods) {
    try {
      if (method == "FD") rows.push_back(benchmark_fd(in));
      else if (method == "RB") rows.push_back(benchmark_rulebased(in, core_rule, adopt_rule, a.scenarios, a.sample_seed));
      else if (method == "Deterministic") rows.push_back(benchmark_deterministic(in, core, adopt, a.threshold));
      else if (method == "Full") rows.push_back(benchmark_full(in, core, adopt, a.scenarios, a.sample_seed));
      else throw std::invalid_argument(fmt::format("unknown method '{}' (FD, RB, Deterministic, Full)", method));
    } catch (const InfeasibleError& e) {
      BenchRow row;
      row.method = method;
      row.solve.message = e.what();
      rows.push_back(std::move(row));
    }
    const BenchRow& row = rows.back();
    if (!row.solve.has_design) fmt::print(stderr, "{}: {}\n", method, row.solve.message);
  }
  Provenance prov = run.provenance(inputs);
  prov.set("budget", format_double(in.budget));
  prov.set("sample_seed", std::to_string(a.sample_seed));
  prov.set("eval_seed", std::to_string(a.eval_seed));
  run.write("bench.csv", prov.render() + report_csv(rows, true));
  run.write("bench.txt", report_text(rows, true));
  std::cout << report_text(rows, a.omit_timing);
  return kOk;
}

template <class T>
void seed_option(CLI::App* sub, T& value, const std::string& what) {
  sub->add_option("--seed", value, what)->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transit network design with core and latent rider demand"};
  app.set_version_flag("--version", std::string(kVersion));
  app.set_config("--config", "", "key=value config file; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();
  Run run;
  app.add_option("--run", run.dir, "run directory holding all artifacts")->capture_default_str();
  app.add_option("--threads", run.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  GenArgs gen;
  auto* s_gen = app.add_subcommand("gen", "generate a synthetic instance");
  s_gen->add_option("--preset", gen.preset, "tiny, small or medium")->capture_default_str();
  s_gen->add_option("--spec", gen.spec_file, "key=value generator spec file");
  s_gen->add_option("--set", gen.sets, "generator override KEY=VALUE (repeatable)");
  s_gen->add_option("--seed", gen.seed, "generator seed");

  PathingConfig pathing;
  auto* s_paths = app.add_subcommand("paths", "enumerate candidate paths per trip");
  s_paths->add_option("--w", pathing.paths_per_trip, "paths per trip")->capture_default_str();
  s_paths->add_option("--k-access", pathing.k_access, "stops linked to each trip end")->capture_default_str();
  s_paths->add_option("--walk-speed", pathing.walk_speed, "meters per minute")->capture_default_str();
  s_paths->add_option("--walk-cap", pathing.walk_cap_minutes, "max walking minutes per path")->capture_default_str();

  LabelArgs label;
  auto* s_label = app.add_subcommand("label", "simulate labeled training rows from choice models");
  s_label->add_option("--role", label.role, "core, adopt or both")->capture_default_str();
  s_label->add_option("--core-model", label.core_model)->capture_default_str();
  s_label->add_option("--adopt-model", label.adopt_model)->capture_default_str();
  seed_option(s_label, label.seed, "label seed");

  TrainArgs train;
  auto* s_train = app.add_subcommand("train", "fit logit choice models by cross-validated grid search");
  s_train->add_option("--role", train.role, "core, adopt or both")->capture_default_str();
  s_train->add_option("--labels", train.labels, "label file (default labels_<role>.csv)");
  s_train->add_option("--folds", train.folds)->capture_default_str()->check(CLI::Range(2, 100));
  seed_option(s_train, train.seed, "fold assignment seed");

  SampleArgs sample;
  auto* s_sample = app.add_subcommand("sample", "draw in-sample scenarios");
  s_sample->add_option("--scenarios", sample.scenarios, "I")->capture_default_str()->check(CLI::PositiveNumber);
  s_sample->add_option("--core-model", sample.core_model)->capture_default_str();
  s_sample->add_option("--adopt-model", sample.adopt_model)->capture_default_str();
  seed_option(s_sample, sample.seed, "scenario seed");

  SolveArgs solve_args;
  auto* s_solve = app.add_subcommand("solve", "choose arcs to open");
  s_solve->add_option("--solver", solve_args.solver, "exact, heuristic or export")->capture_default_str();
  s_solve->add_option("--budget", solve_args.budget, "operating budget (default: suggested_budget of arcs.csv)");
  s_solve->add_option("--time-limit", solve_args.time_limit, "seconds")->capture_default_str();
  s_solve->add_option("--iterations", solve_args.iterations, "search iterations")->capture_default_str();
  s_solve->add_option("--portfolio", solve_args.portfolio, "independent search runs")->capture_default_str();
  s_solve->add_option("--format", solve_args.format, "export format: lp or opb")->capture_default_str();
  seed_option(s_solve, solve_args.seed, "search seed");

  VerifyArgs verify;
  auto* s_verify = app.add_subcommand("verify", "check an external solver's solution and import its design");
  s_verify->add_option("--solution", verify.solution, "solution file")->required();
  s_verify->add_option("--budget", verify.budget, "operating budget used at export");

  EvalArgs eval;
  auto* s_eval = app.add_subcommand("eval", "evaluate a design out of sample");
  s_eval->add_option("--design", eval.design)->capture_default_str();
  s_eval->add_option("--scenarios", eval.scenarios, "I'")->capture_default_str()->check(CLI::PositiveNumber);
  s_eval->add_option("--penalty", eval.penalty, "l_r for unserved core trips")->capture_default_str();
  s_eval->add_option("--core-model", eval.core_model)->capture_default_str();
  s_eval->add_option("--adopt-model", eval.adopt_model)->capture_default_str();
  s_eval->add_flag("--geojson", eval.geojson, "also write design.geojson");
  seed_option(s_eval, eval.seed, "evaluation seed");

  BenchArgs bench;
  auto* s_bench = app.add_subcommand("bench", "compare FD, rule-based, deterministic and full designs");
  s_bench->add_option("--scenarios", bench.scenarios, "I")->capture_default_str();
  s_bench->add_option("--eval-scenarios", bench.eval_scenarios, "I'")->capture_default_str();
  s_bench->add_option("--sample-seed", bench.sample_seed)->capture_default_str();
  s_bench->add_option("--eval-seed", bench.eval_seed)->capture_default_str();
  s_bench->add_option("--budget", bench.budget);
  s_bench->add_option("--solver", bench.solver)->capture_default_str();
  s_bench->add_option("--time-limit", bench.time_limit)->capture_default_str();
  s_bench->add_option("--iterations", bench.iterations)->capture_default_str();
  s_bench->add_option("--threshold", bench.threshold, "deterministic rounding threshold")->capture_default_str();
  s_bench->add_option("--rule-walk", bench.rule_walk, "station walk minutes of the core rule")->capture_default_str();
  s_bench->add_option("--rule-p-near", bench.rule_p_near)->capture_default_str();
  s_bench->add_option("--rule-p-far", bench.rule_p_far)->capture_default_str();
  s_bench->add_option("--penalty", bench.penalty)->capture_default_str();
  s_bench->add_option("--core-model", bench.core_model, "model for Deterministic and Full")->capture_default_str();
  s_bench->add_option("--adopt-model", bench.adopt_model, "model for Deterministic and Full")->capture_default_str();
  s_bench->add_option("--eval-core-model", bench.eval_core_model)->capture_default_str();
  s_bench->add_option("--eval-adopt-model", bench.eval_adopt_model)->capture_default_str();
  s_bench->add_option("--methods", bench.methods)->delimiter(',')->capture_default_str();
  s_bench->add_flag("--omit-timing", bench.omit_timing, "drop the run-time column from the printed table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  run.command = sub->get_name();
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == run.command) continue;
    if (a == "--threads" || a == "--run") {
      ++i;
      continue;
    }
    if (a.rfind("--threads=", 0) == 0 || a.rfind("--run=", 0) == 0) continue;
    run.args.push_back(a);
  }

  try {
    if (sub == s_gen) return cmd_gen(run, gen);
    if (sub == s_paths) return cmd_paths(run, pathing);
    if (sub == s_label) return cmd_label(run, label);
    if (sub == s_train) return cmd_train(run, train);
    if (sub == s_sample) return cmd_sample(run, sample);
    if (sub == s_solve) return cmd_solve(run, solve_args);
    if (sub == s_verify) return cmd_verify(run, verify);
    if (sub == s_eval) return cmd_eval(run, eval);
    if (sub == s_bench) return cmd_bench(run, bench);
  } catch (const MissingArtifact& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kMissing;
  } catch (const InfeasibleError& e) {
    fmt::print(stderr, "infeasible: {}\n", e.what());
    return kInfeasible;
  } catch (const TimeoutError& e) {
    fmt::print(stderr, "timeout: {}\n", e.what());
    return kTimeout;
  } catch (const ParseError& e) {
    fmt::print(stderr, "parse error: {}\n", e.what());
    return kUsage;
  } catch (const SchemaError& e) {
    fmt::print(stderr, "schema error: {}\n", e.what());
    return kUsage;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kFailure;
  }
  return kFailure;
}
