#pragma once

// Labeled training rows for the logit trainer. File layout:
//
//   # role=adopt
//   # schema=age:numeric;car:categorical
//   label,age,car,path_total_min,path_transfers,path_walk_min,path_in_vehicle_min
//   1,34,"yes",41.5,1,9.2,27.3

#include <filesystem>
#include <istream>
#include <string>

#include "tnd/choice.hpp"
#include "tnd/logit.hpp"
#include "tnd/pathing.hpp"
#include "tnd/rng.hpp"
#include "tnd/text_io.hpp"

namespace tnd {

/// Draws one core label per trip and one adoption label per candidate path
/// from the given (usually ground-truth) models.
inline LabeledDataset simulate_labels(ModelRole role, const TripPopulation& population, const PathSet& paths,
                                      const ChoiceModel& model, std::uint64_t seed) {
  LabeledDataset data;
  data.schema = population.schema();
  data.path_features = role == ModelRole::adopt;
  for (std::size_t r = 0; r < population.size(); ++r) {
    const Trip& t = population[r];
    const auto key = id_key(t.id);
    if (role == ModelRole::core) {
      data.rows.push_back({t.context, std::nullopt, bernoulli_at(seed, Stream::labels, 0, key, 0, prob_core(model, t))});
      continue;
    }
    for (const Path& p : paths.of(r)) {
      const double q = prob_adopt(model, t, p.id, p.features());
      data.rows.push_back({t.context, p.features(),
                           bernoulli_at(seed, Stream::labels, 0, key, static_cast<std::uint64_t>(p.rank) + 1, q)});
    }
  }
  return data;
}

inline std::string write_labels(const LabeledDataset& data, ModelRole role, Provenance provenance = {}) {
  provenance.set("role", std::string(to_string(role)));
  provenance.set("schema", data.schema.signature());
  std::string out = provenance.render();
  out += "label";
  for (const auto& f : data.schema.features) out += "," + f.name;
  if (data.path_features)
    for (auto n : FeatureEncoder::kPathFeatureNames) out += fmt::format(",{}", n);
  out += '\n';
  for (const auto& row : data.rows) {
    out += row.label ? "1" : "0";
    for (const auto& v : row.context.values) {
      out += ',';
      if (const auto* d = std::get_if<double>(&v)) out += format_double(*d);
      else if (const auto* o = std::get_if<long long>(&v)) out += std::to_string(*o);
      else out += quote_csv(std::get<std::string>(v));
    }
    if (data.path_features) {
      if (!row.path) throw SchemaError("adoption row without path features");
      out += fmt::format(",{},{},{},{}", format_double(row.path->total_minutes), row.path->transfers,
                         format_double(row.path->walk_minutes), format_double(row.path->in_vehicle_minutes));
    }
    out += '\n';
  }
  return out;
}

struct LabelFile {
  ModelRole role = ModelRole::core;
  LabeledDataset data;
  Provenance provenance;
};

inline LabelFile read_labels(std::istream& in) {
  LineReader reader(in);
  std::string line;
  if (!reader.next(line)) throw ParseError("missing label header", reader.line_no());
  LabelFile file;
  const std::string* role = reader.provenance.find("role");
  const std::string* sig = reader.provenance.find("schema");
  if (!role || !sig) throw ParseError("label file needs '# role=' and '# schema=' header lines", reader.line_no());
  if (*role == "core") file.role = ModelRole::core;
  else if (*role == "adopt") file.role = ModelRole::adopt;
  else throw ParseError(fmt::format("unknown role '{}'", *role), reader.line_no());
  file.data.schema = ContextSchema::from_signature(*sig);
  file.data.path_features = file.role == ModelRole::adopt;
  const auto& features = file.data.schema.features;

  auto header = split_csv(line, reader.line_no());
  std::vector<std::string> expected{"label"};
  for (const auto& f : features) expected.push_back(f.name);
  if (file.data.path_features)
    for (auto n : FeatureEncoder::kPathFeatureNames) expected.emplace_back(n);
  if (header != expected) throw ParseError(fmt::format("label header must be '{}'", join(expected, ",")), reader.line_no());

  while (reader.next(line)) {
    const auto n = reader.line_no();
    auto f = split_csv(line, n);
    if (f.size() != expected.size())
      throw ParseError(fmt::format("expected {} fields, got {}", expected.size(), f.size()), n);
    LabeledRow row;
    if (f[0] != "0" && f[0] != "1") throw ParseError(fmt::format("label must be 0 or 1, got '{}'", f[0]), n);
    row.label = f[0] == "1";
    for (std::size_t j = 0; j < features.size(); ++j) {
      const std::string& raw = f[j + 1];
      switch (features[j].kind) {
        case FeatureKind::numeric: row.context.values.emplace_back(parse_double(raw, n)); break;
        case FeatureKind::ordinal: row.context.values.emplace_back(parse_int(raw, n)); break;
        case FeatureKind::categorical: row.context.values.emplace_back(raw); break;
      }
    }
    if (file.data.path_features) {
      const std::size_t b = features.size() + 1;
      row.path = PathFeatures{parse_double(f[b], n), static_cast<int>(parse_int(f[b + 1], n)), parse_double(f[b + 2], n),
                              parse_double(f[b + 3], n)};
    }
    file.data.rows.push_back(std::move(row));
  }
  file.provenance = reader.provenance;
  return file;
}

inline LabelFile load_labels(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_labels(in);
}

}  // namespace tnd
