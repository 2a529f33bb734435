#pragma once

// Trip population: O-D pairs, rider counts and per-trip context features.

#include <cmath>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "tnd/errors.hpp"
#include "tnd/netmodel.hpp"
#include "tnd/text_io.hpp"

namespace tnd {

enum class FeatureKind { numeric, ordinal, categorical };

inline std::string_view to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::numeric: return "numeric";
    case FeatureKind::ordinal: return "ordinal";
    case FeatureKind::categorical: return "categorical";
  }
  return "?";
}

inline FeatureKind parse_feature_kind(std::string_view s, std::size_t line_no = 0) {
  if (s == "numeric") return FeatureKind::numeric;
  if (s == "ordinal") return FeatureKind::ordinal;
  if (s == "categorical") return FeatureKind::categorical;
  throw ParseError(fmt::format("unknown feature kind '{}'", s), line_no);
}

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::numeric;
  bool operator==(const FeatureSpec&) const = default;
};

struct ContextSchema {
  std::vector<FeatureSpec> features;

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < features.size(); ++i)
      if (features[i].name == name) return i;
    return std::nullopt;
  }
  std::size_t index_of(std::string_view name) const {
    if (auto i = find(name)) return *i;
    throw SchemaError(fmt::format("schema has no feature '{}'", name));
  }
  /// `name:kind;name:kind...`, the form used in model file headers.
  std::string signature() const {
    std::string s;
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (i) s += ';';
      s += features[i].name + ":" + std::string(to_string(features[i].kind));
    }
    return s;
  }
  static ContextSchema from_signature(std::string_view sig) {
    ContextSchema schema;
    if (trim(sig).empty()) return schema;
    for (const auto& part : split(sig, ';')) {
      auto colon = part.rfind(':');
      if (colon == std::string::npos) throw ParseError(fmt::format("bad schema entry '{}'", part));
      schema.features.push_back({part.substr(0, colon), parse_feature_kind(part.substr(colon + 1))});
    }
    return schema;
  }
  bool operator==(const ContextSchema&) const = default;
};

/// numeric -> double, ordinal -> integer code, categorical -> label.
using FeatureValue = std::variant<double, long long, std::string>;

struct ContextVector {
  std::vector<FeatureValue> values;

  double numeric(std::size_t i) const {
    if (const auto* d = std::get_if<double>(&values.at(i))) return *d;
    if (const auto* o = std::get_if<long long>(&values.at(i))) return static_cast<double>(*o);
    throw SchemaError("feature is categorical, not numeric");
  }
  const std::string& category(std::size_t i) const {
    if (const auto* s = std::get_if<std::string>(&values.at(i))) return *s;
    throw SchemaError("feature is not categorical");
  }
  bool operator==(const ContextVector&) const = default;
};

/// Verifies that each value's type matches the feature kind declared in `schema`.
inline void check_context(const ContextVector& x, const ContextSchema& schema) {
  if (x.values.size() != schema.features.size())
    throw SchemaError(fmt::format("context has {} values, schema declares {}", x.values.size(),
                                  schema.features.size()));
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    const auto kind = schema.features[i].kind;
    const auto& v = x.values[i];
    bool ok = (kind == FeatureKind::numeric && std::holds_alternative<double>(v)) ||
              (kind == FeatureKind::ordinal && std::holds_alternative<long long>(v)) ||
              (kind == FeatureKind::categorical && std::holds_alternative<std::string>(v));
    if (!ok) throw SchemaError(fmt::format("feature '{}' has the wrong value type", schema.features[i].name));
    if (kind == FeatureKind::numeric && !std::isfinite(std::get<double>(v)))
      throw SchemaError(fmt::format("feature '{}' is not finite", schema.features[i].name));
  }
}

enum class TravelMode { transit, drive };

struct Trip {
  std::string id;
  Point origin;
  Point dest;
  int riders = 1;  // e_r: riders sharing this trip's decisions
  ContextVector context;
  TravelMode current_mode = TravelMode::drive;
};

class TripPopulation {
 public:
  TripPopulation() = default;
  TripPopulation(ContextSchema schema, std::vector<Trip> trips) : schema_(std::move(schema)), trips_(std::move(trips)) {
    for (std::size_t i = 0; i < trips_.size(); ++i) {
      const Trip& t = trips_[i];
      if (t.riders < 1) throw StructuralError(fmt::format("trip '{}' has fewer than one rider", t.id));
      if (t.origin.x == t.dest.x && t.origin.y == t.dest.y)
        throw StructuralError(fmt::format("trip '{}' has identical origin and destination", t.id));
      check_context(t.context, schema_);
      if (!by_id_.emplace(t.id, i).second) throw StructuralError(fmt::format("duplicate trip id '{}'", t.id));
    }
  }

  const ContextSchema& schema() const { return schema_; }
  const std::vector<Trip>& trips() const { return trips_; }
  std::size_t size() const { return trips_.size(); }
  const Trip& operator[](std::size_t i) const { return trips_[i]; }

  std::optional<std::size_t> find(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t index_of(const std::string& id) const {
    if (auto i = find(id)) return *i;
    throw StructuralError(fmt::format("unknown trip id '{}'", id));
  }

  long long total_riders() const {
    long long total = 0;
    for (const Trip& t : trips_) total += t.riders;
    return total;
  }

 private:
  ContextSchema schema_;
  std::vector<Trip> trips_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// Riders using transit: sum of e_r over trips whose usage flag is set. `usage` is aligned with the trips.
inline long long coverage(const TripPopulation& population, const std::vector<std::uint8_t>& usage) {
  if (usage.size() != population.size())
    throw StructuralError("usage vector does not match the population size");
  long long total = 0;
  for (std::size_t i = 0; i < usage.size(); ++i)
    if (usage[i]) total += population[i].riders;
  return total;
}

inline long long coverage(const TripPopulation& population, const std::map<std::string, bool>& usage) {
  std::vector<std::uint8_t> aligned(population.size(), 0);
  std::vector<bool> seen(population.size(), false);
  for (const auto& [id, used] : usage) {
    auto i = population.index_of(id);
    aligned[i] = used ? 1 : 0;
    seen[i] = true;
  }
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i]) throw StructuralError(fmt::format("usage missing for trip '{}'", population[i].id));
  return coverage(population, aligned);
}

// --- trips file -------------------------------------------------------------

inline constexpr std::string_view kTripsFixedColumns = "id,ox,oy,dx,dy,e_r,current_mode";

inline TripPopulation read_trips(std::istream& in, Provenance* provenance = nullptr) {
  LineReader reader(in);
  std::string line;
  if (!reader.next(line)) throw ParseError("missing trips header", reader.line_no());
  auto header = split_csv(line, reader.line_no());
  auto fixed = split(kTripsFixedColumns, ',');
  if (header.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), header.begin()))
    throw ParseError(fmt::format("trips header must start with '{}'", kTripsFixedColumns), reader.line_no());
  ContextSchema schema;
  for (std::size_t i = fixed.size(); i < header.size(); ++i) {
    auto colon = header[i].rfind(':');
    if (colon == std::string::npos)
      throw ParseError(fmt::format("feature column '{}' lacks ':kind'", header[i]), reader.line_no());
    schema.features.push_back({header[i].substr(0, colon), parse_feature_kind(header[i].substr(colon + 1),
                                                                              reader.line_no())});
  }
  std::vector<Trip> trips;
  while (reader.next(line)) {
    const auto n = reader.line_no();
    auto f = split_csv(line, n);
    if (f.size() != header.size())
      throw ParseError(fmt::format("expected {} fields, got {}", header.size(), f.size()), n);
    for (std::size_t i = 0; i < fixed.size(); ++i)
      if (trim(f[i]).empty()) throw ParseError(fmt::format("missing value for '{}'", fixed[i]), n);
    Trip t;
    t.id = f[0];
    t.origin = {parse_double(f[1], n), parse_double(f[2], n)};
    t.dest = {parse_double(f[3], n), parse_double(f[4], n)};
    auto riders = parse_int(f[5], n);
    if (riders < 1) throw ParseError(fmt::format("trip '{}' must have e_r >= 1", t.id), n);
    t.riders = static_cast<int>(riders);
    if (f[6] == "transit") t.current_mode = TravelMode::transit;
    else if (f[6] == "drive") t.current_mode = TravelMode::drive;
    else throw ParseError(fmt::format("unknown current_mode '{}'", f[6]), n);
    for (std::size_t j = 0; j < schema.features.size(); ++j) {
      const std::string& raw = f[fixed.size() + j];
      switch (schema.features[j].kind) {
        case FeatureKind::numeric:
          t.context.values.emplace_back(parse_double(raw, n));
          break;
        case FeatureKind::ordinal:
          t.context.values.emplace_back(parse_int(raw, n));
          break;
        case FeatureKind::categorical:
          if (raw.empty()) throw ParseError(fmt::format("missing value for '{}'", schema.features[j].name), n);
          t.context.values.emplace_back(raw);
          break;
      }
    }
    trips.push_back(std::move(t));
  }
  if (provenance) *provenance = reader.provenance;
  try {
    return TripPopulation(std::move(schema), std::move(trips));
  } catch (const StructuralError& e) {
    throw ParseError(e.what());
  }
}

inline std::string write_trips(const TripPopulation& population, const Provenance& provenance = {}) {
  std::string out = provenance.render();
  out += kTripsFixedColumns;
  for (const auto& f : population.schema().features) out += fmt::format(",{}:{}", f.name, to_string(f.kind));
  out += '\n';
  for (const Trip& t : population.trips()) {
    out += fmt::format("{},{},{},{},{},{},{}", t.id, format_double(t.origin.x), format_double(t.origin.y),
                       format_double(t.dest.x), format_double(t.dest.y), t.riders,
                       t.current_mode == TravelMode::transit ? "transit" : "drive");
    for (const auto& v : t.context.values) {
      out += ',';
      if (const auto* d = std::get_if<double>(&v)) out += format_double(*d);
      else if (const auto* o = std::get_if<long long>(&v)) out += std::to_string(*o);
      else out += quote_csv(std::get<std::string>(v));
    }
    out += '\n';
  }
  return out;
}

inline TripPopulation load_trips(const std::filesystem::path& path, Provenance* provenance = nullptr) {
  auto in = open_input(path);
  return read_trips(in, provenance);
}

}  // namespace tnd
