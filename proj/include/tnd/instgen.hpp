#pragma once

// Synthetic city: a jittered grid of stops, a fixed two-way rail line along
// one row, candidate bus arcs in both directions to each stop's nearest
// neighbors, and trips whose contexts feed declared logit processes for core
// membership and path adoption.

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "tnd/choice.hpp"
#include "tnd/demand.hpp"
#include "tnd/errors.hpp"
#include "tnd/netmodel.hpp"
#include "tnd/rng.hpp"
#include "tnd/text_io.hpp"

namespace tnd {

struct GenSpec {
  std::string preset = "small";
  int cols = 10;
  int rows = 6;
  double spacing = 700.0;       // meters between grid stops
  double jitter = 0.15;         // fraction of spacing
  int rail_row = -1;            // -1: middle row; -2: no rail
  int rail_every = 2;           // every n-th stop of the rail row is a station
  double rail_speed = 700.0;    // meters per minute
  int rail_frequency = 6;
  double bus_speed = 300.0;     // meters per minute
  double detour = 1.2;          // bus path length over straight-line distance
  int bus_neighbors = 5;
  int max_bus_pairs = 0;        // 0: unlimited; else keep the shortest pairs
  int frequency = kDefaultFrequency;
  double padding = kDefaultPaddingMinutes;
  double hourly_rate = kDefaultHourlyRate;
  int trips = 500;
  double min_trip_distance = 2500.0;
  int max_riders = 1;
  double car_share = 0.7;
  double car_gradient = 1.4;     // car share change from the west edge to the east edge
  double budget_fraction = 0.3;  // suggested budget as a share of the total free-arc cost
  std::uint64_t seed = 1;
  std::map<std::string, double> core_weights;   // encoded feature name (or "intercept") -> weight
  std::map<std::string, double> adopt_weights;
};

inline std::map<std::string, double> default_core_weights() {
  return {{"intercept", 6.0}, {"drive_min", 0.0},  {"income", -0.3},
          {"age", 0.0},       {"car=yes", -8.0},   {"rail_walk_min", -0.5}};
}

inline std::map<std::string, double> default_adopt_weights() {
  return {{"intercept", 0.8},        {"drive_min", 0.05},       {"income", -0.05},     {"age", -0.005},
          {"car=yes", -3.0},         {"rail_walk_min", 0.0},    {"path_total_min", -0.06},
          {"path_transfers", -0.3},  {"path_walk_min", -0.02},  {"path_in_vehicle_min", 0.0}};
}

inline GenSpec preset_spec(std::string_view name) {
  GenSpec s;
  s.preset = std::string(name);
  s.core_weights = default_core_weights();
  s.adopt_weights = default_adopt_weights();
  if (name == "tiny") {
    s.cols = 3;
    s.rows = 2;
    s.spacing = 2000.0;
    s.rail_row = 0;
    s.rail_every = 2;
    s.max_bus_pairs = 6;
    s.trips = 16;
    s.min_trip_distance = 2800.0;
    s.budget_fraction = 0.5;
  } else if (name == "small") {
    s.cols = 10;
    s.rows = 6;
    s.trips = 500;
  } else if (name == "medium") {
    s.cols = 20;
    s.rows = 10;
    s.trips = 2000;
    s.min_trip_distance = 3000.0;
  } else {
    throw std::invalid_argument(fmt::format("unknown preset '{}' (tiny, small, medium)", name));
  }
  return s;
}

namespace detail {

inline void apply_spec_key(GenSpec& s, const std::string& key, const std::string& value, std::size_t line) {
  auto num = [&] { return parse_double(value, line); };
  auto integer = [&] { return static_cast<int>(parse_int(value, line)); };
  if (key.rfind("core.", 0) == 0) s.core_weights[key.substr(5)] = num();
  else if (key.rfind("adopt.", 0) == 0) s.adopt_weights[key.substr(6)] = num();
  else if (key == "cols") s.cols = integer();
  else if (key == "rows") s.rows = integer();
  else if (key == "spacing") s.spacing = num();
  else if (key == "jitter") s.jitter = num();
  else if (key == "rail_row") s.rail_row = integer();
  else if (key == "rail_every") s.rail_every = integer();
  else if (key == "rail_speed") s.rail_speed = num();
  else if (key == "rail_frequency") s.rail_frequency = integer();
  else if (key == "bus_speed") s.bus_speed = num();
  else if (key == "detour") s.detour = num();
  else if (key == "bus_neighbors") s.bus_neighbors = integer();
  else if (key == "max_bus_pairs") s.max_bus_pairs = integer();
  else if (key == "frequency") s.frequency = integer();
  else if (key == "padding") s.padding = num();
  else if (key == "hourly_rate") s.hourly_rate = num();
  else if (key == "trips") s.trips = integer();
  else if (key == "min_trip_distance") s.min_trip_distance = num();
  else if (key == "max_riders") s.max_riders = integer();
  else if (key == "car_share") s.car_share = num();
  else if (key == "car_gradient") s.car_gradient = num();
  else if (key == "budget_fraction") s.budget_fraction = num();
  else if (key == "seed") s.seed = static_cast<std::uint64_t>(parse_int(value, line));
  else throw ParseError(fmt::format("unknown generator key '{}'", key), line);
}

}  // namespace detail

/// Reads `key=value` lines. A `preset` key, if present, must come first and
/// sets the defaults that later keys override.
inline GenSpec read_spec(std::istream& in, const std::string& default_preset = "small") {
  GenSpec s = preset_spec(default_preset);
  std::string line;
  std::size_t n = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++n;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.rfind('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value", n);
    std::string key(trim(t.substr(0, eq)));
    std::string value(trim(t.substr(eq + 1)));
    if (key == "preset") {
      if (any) throw ParseError("'preset' must precede other keys", n);
      s = preset_spec(value);
    } else {
      detail::apply_spec_key(s, key, value, n);
    }
    any = true;
  }
  return s;
}

inline void apply_spec_override(GenSpec& s, const std::string& assignment) {
  auto eq = assignment.rfind('=');
  if (eq == std::string::npos) throw ParseError(fmt::format("expected key=value, got '{}'", assignment));
  detail::apply_spec_key(s, std::string(trim(std::string_view(assignment).substr(0, eq))),
                         std::string(trim(std::string_view(assignment).substr(eq + 1))), 0);
}

inline std::string write_spec(const GenSpec& s) {
  std::string out = fmt::format(
      "cols={}\nrows={}\nspacing={}\njitter={}\nrail_row={}\nrail_every={}\nrail_speed={}\nrail_frequency={}\n"
      "bus_speed={}\ndetour={}\nbus_neighbors={}\nmax_bus_pairs={}\nfrequency={}\npadding={}\nhourly_rate={}\n"
      "trips={}\nmin_trip_distance={}\nmax_riders={}\ncar_share={}\ncar_gradient={}\nbudget_fraction={}\nseed={}\n",
      s.cols, s.rows, format_double(s.spacing), format_double(s.jitter), s.rail_row, s.rail_every,
      format_double(s.rail_speed), s.rail_frequency, format_double(s.bus_speed), format_double(s.detour),
      s.bus_neighbors, s.max_bus_pairs, s.frequency, format_double(s.padding), format_double(s.hourly_rate), s.trips,
      format_double(s.min_trip_distance), s.max_riders, format_double(s.car_share), format_double(s.car_gradient), format_double(s.budget_fraction),
      s.seed);
  for (const auto& [k, v] : s.core_weights) out += fmt::format("core.{}={}\n", k, format_double(v));
  for (const auto& [k, v] : s.adopt_weights) out += fmt::format("adopt.{}={}\n", k, format_double(v));
  return out;
}

inline ContextSchema generator_schema() {
  return {{{"drive_min", FeatureKind::numeric},
           {"income", FeatureKind::ordinal},
           {"age", FeatureKind::numeric},
           {"car", FeatureKind::categorical},
           {"rail_walk_min", FeatureKind::numeric}}};
}

/// Builds a ground-truth logit from named weights; unnamed features get weight 0.
inline ChoiceModel ground_truth_model(ModelRole role, const std::map<std::string, double>& named) {
  LogitModel m;
  m.encoder.schema = generator_schema();
  m.encoder.categories["car"] = {"no", "yes"};
  m.encoder.path_features = role == ModelRole::adopt;
  auto names = m.encoder.encoded_names();
  for (const auto& [k, v] : named)
    if (k != "intercept" && std::find(names.begin(), names.end(), k) == names.end())
      throw SchemaError(fmt::format("no encoded feature '{}' in the generator schema", k));
  for (const auto& n : names) {
    auto it = named.find(n);
    m.weights.push_back(it == named.end() ? 0.0 : it->second);
  }
  if (auto it = named.find("intercept"); it != named.end()) m.intercept = it->second;
  return {role, GroundTruthModel{std::move(m)}};
}

struct Instance {
  GenSpec spec;
  TransitGraph graph;
  TripPopulation population;
  ChoiceModel core_truth;
  ChoiceModel adopt_truth;
  double total_free_cost = 0.0;
  double suggested_budget = 0.0;
};

inline double round_to(double v, double unit) { return std::round(v / unit) * unit; }

inline void validate_spec(const GenSpec& s) {
  if (s.cols < 1 || s.rows < 1 || s.cols * s.rows < 2) throw std::invalid_argument("grid needs at least two stops");
  if (!(s.spacing > 0) || s.jitter < 0 || s.jitter >= 0.5) throw std::invalid_argument("bad spacing or jitter");
  if (s.bus_neighbors < 1) throw std::invalid_argument("bus_neighbors must be at least 1");
  if (s.trips < 0 || s.max_riders < 1) throw std::invalid_argument("bad trip count or rider cap");
  if (!(s.bus_speed > 0) || !(s.rail_speed > 0) || s.frequency < 1 || s.rail_frequency < 1)
    throw std::invalid_argument("speeds and frequencies must be positive");
  if (s.car_share < 0 || s.car_share > 1) throw std::invalid_argument("car_share must lie in [0, 1]");
  if (s.rail_every < 1) throw std::invalid_argument("rail_every must be at least 1");
  if (s.rail_row >= s.rows) throw std::invalid_argument("rail_row outside the grid");
}

inline Instance generate(const GenSpec& spec) {
  validate_spec(spec);
  Instance inst;
  inst.spec = spec;
  Rng rng(spec.seed, Stream::generator);

  std::vector<Node> nodes;
  const int width = std::max(3, static_cast<int>(std::to_string(spec.cols * spec.rows).size()));
  for (int r = 0; r < spec.rows; ++r)
    for (int c = 0; c < spec.cols; ++c) {
      const double jx = rng.uniform(-spec.jitter, spec.jitter) * spec.spacing;
      const double jy = rng.uniform(-spec.jitter, spec.jitter) * spec.spacing;
      nodes.push_back({fmt::format("s{:0{}}", r * spec.cols + c, width),
                       {round_to(c * spec.spacing + jx, 0.1), round_to(r * spec.spacing + jy, 0.1)},
                       false});
    }

  std::vector<Arc> arcs;
  const int rail_row = spec.rail_row == -1 ? spec.rows / 2 : spec.rail_row;
  std::vector<int> stations;
  if (rail_row >= 0)
    for (int c = 0; c < spec.cols; c += spec.rail_every) stations.push_back(rail_row * spec.cols + c);
  if (stations.size() < 2) stations.clear();
  for (int s : stations) nodes[static_cast<std::size_t>(s)].is_rail_station = true;
  int rail_id = 0;
  for (std::size_t k = 0; k + 1 < stations.size(); ++k) {
    const Node& a = nodes[static_cast<std::size_t>(stations[k])];
    const Node& b = nodes[static_cast<std::size_t>(stations[k + 1])];
    const double minutes = std::max(0.01, round_to(distance(a.position, b.position) / spec.rail_speed, 0.01));
    for (int dir = 0; dir < 2; ++dir) {
      const Node& from = dir == 0 ? a : b;
      const Node& to = dir == 0 ? b : a;
      arcs.push_back({fmt::format("r{:03}", rail_id++), from.id, to.id, kRail, spec.rail_frequency, minutes,
                      minutes + spec.padding, 0.0, true});
    }
  }

  // Undirected stop pairs to each stop's nearest neighbors.
  std::set<std::pair<int, int>> pair_set;
  const int n = static_cast<int>(nodes.size());
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> by_distance;
    for (int j = 0; j < n; ++j)
      if (j != i) by_distance.emplace_back(distance(nodes[static_cast<std::size_t>(i)].position,
                                                    nodes[static_cast<std::size_t>(j)].position), j);
    std::sort(by_distance.begin(), by_distance.end());
    for (int k = 0; k < spec.bus_neighbors && k < static_cast<int>(by_distance.size()); ++k) {
      const int j = by_distance[static_cast<std::size_t>(k)].second;
      pair_set.emplace(std::min(i, j), std::max(i, j));
    }
  }
  std::vector<std::tuple<double, int, int>> pairs;
  for (auto [i, j] : pair_set)
    pairs.emplace_back(distance(nodes[static_cast<std::size_t>(i)].position, nodes[static_cast<std::size_t>(j)].position),
                       i, j);
  std::sort(pairs.begin(), pairs.end());
  if (spec.max_bus_pairs > 0 && static_cast<int>(pairs.size()) > spec.max_bus_pairs)
    pairs.resize(static_cast<std::size_t>(spec.max_bus_pairs));
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<1>(a), std::get<2>(a)) < std::tie(std::get<1>(b), std::get<2>(b));
  });
  const int arc_width = std::max(4, static_cast<int>(std::to_string(2 * pairs.size()).size()));
  int bus_id = 0;
  for (const auto& [d, i, j] : pairs) {
    const double minutes = std::max(0.01, round_to(d * spec.detour / spec.bus_speed, 0.01));
    const double cost = round_to(arc_operating_cost(spec.frequency, minutes, spec.hourly_rate), 0.01);
    for (int dir = 0; dir < 2; ++dir) {
      const Node& from = nodes[static_cast<std::size_t>(dir == 0 ? i : j)];
      const Node& to = nodes[static_cast<std::size_t>(dir == 0 ? j : i)];
      arcs.push_back({fmt::format("b{:0{}}", bus_id++, arc_width), from.id, to.id, kBus, spec.frequency, minutes,
                      minutes + spec.padding, cost, false});
      inst.total_free_cost += cost;
    }
  }
  inst.total_free_cost = round_to(inst.total_free_cost, 0.01);
  inst.suggested_budget = round_to(spec.budget_fraction * inst.total_free_cost, 0.01);
  inst.graph = TransitGraph(nodes, arcs);

  // Trips.
  const double max_x = (spec.cols - 1) * spec.spacing, max_y = (spec.rows - 1) * spec.spacing;
  const double reach = std::max(max_x, max_y);
  const double min_distance = std::min(spec.min_trip_distance, 0.6 * std::hypot(max_x, max_y));
  auto random_point = [&] {
    return Point{round_to(rng.uniform(0.0, std::max(max_x, 1.0)), 0.1),
                 round_to(rng.uniform(0.0, std::max(max_y, 1.0)), 0.1)};
  };
  auto rail_walk = [&](Point p) {
    double best = reach * 2;
    for (int s : stations) best = std::min(best, distance(p, nodes[static_cast<std::size_t>(s)].position));
    return best / 80.0;
  };
  std::vector<Trip> trips;
  const int trip_width = std::max(4, static_cast<int>(std::to_string(spec.trips).size()));
  for (int t = 0; t < spec.trips; ++t) {
    Trip trip;
    trip.id = fmt::format("t{:0{}}", t, trip_width);
    do {
      trip.origin = random_point();
      trip.dest = random_point();
    } while (distance(trip.origin, trip.dest) < min_distance);
    trip.riders = spec.max_riders == 1 ? 1 : 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.max_riders)));
    const double dist = distance(trip.origin, trip.dest);
    const double drive = round_to(dist * 1.3 / 500.0 + 4.0 + rng.uniform(0.0, 6.0), 0.01);
    const long long income = 1 + static_cast<long long>(rng.below(5));
    const double age = round_to(rng.uniform(18.0, 80.0), 1.0);
    const double east = max_x > 0 ? (trip.origin.x + trip.dest.x) / (2 * max_x) : 0.5;
    const double car_p = std::clamp(spec.car_share + spec.car_gradient * (east - 0.5), 0.0, 1.0);
    const std::string car = rng.bernoulli(car_p) ? "yes" : "no";
    const double rail_min = stations.empty() ? 60.0
                                             : round_to(std::min(60.0, std::max(rail_walk(trip.origin),
                                                                                rail_walk(trip.dest))), 0.01);
    trip.context.values = {drive, income, age, car, rail_min};
    trips.push_back(std::move(trip));
  }
  inst.core_truth = ground_truth_model(ModelRole::core, spec.core_weights);
  inst.adopt_truth = ground_truth_model(ModelRole::adopt, spec.adopt_weights);
  if (std::get<GroundTruthModel>(inst.adopt_truth.body).logit.weight_of("path_total_min") > 0)
    throw std::invalid_argument("adoption weight on path_total_min must be non-positive");
  for (Trip& trip : trips) {
    const double p = prob_core(inst.core_truth, trip);
    trip.current_mode =
        bernoulli_at(spec.seed, Stream::current_mode, 0, id_key(trip.id), 0, p) ? TravelMode::transit : TravelMode::drive;
  }
  inst.population = TripPopulation(generator_schema(), std::move(trips));
  return inst;
}

}  // namespace tnd
