#pragma once

// Model file format. A header of `key,value` lines (kind, role, schema and
// scalar parameters), then one bracketed section of two-column rows:
//
//   kind,logit                kind,table               kind,rule_based
//   role,adopt                role,core                role,core
//   schema,age:numeric;...    [probabilities]          walk_minutes,5
//   path_features,1           t17,0.31                 ...
//   category,car,no|yes                                [stations]
//   class_weight,5                                     1200,800
//   l2_c,1
//   intercept,-2.1
//   [weights]
//   age,0.013

#include <filesystem>
#include <istream>
#include <string>

#include "tnd/choice.hpp"
#include "tnd/text_io.hpp"

namespace tnd {

namespace detail {

inline void write_logit_body(std::string& out, const LogitModel& m) {
  out += fmt::format("schema,{}\n", m.encoder.schema.signature());
  out += fmt::format("path_features,{}\n", m.encoder.path_features ? 1 : 0);
  for (const auto& [name, levels] : m.encoder.categories) out += fmt::format("category,{},{}\n", name, quote_csv(join(levels, "|")));
  out += fmt::format("class_weight,{}\n", format_double(m.class_weight));
  out += fmt::format("l2_c,{}\n", format_double(m.l2_c));
  out += fmt::format("intercept,{}\n", format_double(m.intercept));
  out += "[weights]\n";
  auto names = m.encoder.encoded_names();
  for (std::size_t i = 0; i < names.size(); ++i) out += fmt::format("{},{}\n", names[i], format_double(m.weights[i]));
}

}  // namespace detail

inline std::string write_model(const ChoiceModel& model, const Provenance& provenance = {}) {
  std::string out = provenance.render();
  out += fmt::format("kind,{}\n", model.kind());
  out += fmt::format("role,{}\n", to_string(model.role));
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LogitModel>) {
          detail::write_logit_body(out, m);
        } else if constexpr (std::is_same_v<T, GroundTruthModel>) {
          detail::write_logit_body(out, m.logit);
        } else if constexpr (std::is_same_v<T, StationProximityRule>) {
          out += fmt::format("walk_minutes,{}\nwalk_speed,{}\np_near,{}\np_far,{}\n[stations]\n",
                             format_double(m.walk_minutes), format_double(m.walk_speed), format_double(m.p_near),
                             format_double(m.p_far));
          for (Point s : m.stations) out += fmt::format("{},{}\n", format_double(s.x), format_double(s.y));
        } else if constexpr (std::is_same_v<T, TravelTimeRule>) {
          out += fmt::format("fallback,{}\ntransfer_factor,{}\n[bands]\n", format_double(m.fallback),
                             format_double(m.transfer_factor));
          for (const auto& [limit, p] : m.bands) out += fmt::format("{},{}\n", format_double(limit), format_double(p));
        } else {
          out += "[probabilities]\n";
          for (const auto& [key, p] : m.probabilities) out += fmt::format("{},{}\n", key, format_double(p));
        }
      },
      model.body);
  return out;
}

inline ChoiceModel read_model(std::istream& in, Provenance* provenance = nullptr) {
  LineReader reader(in);
  std::string line;
  std::map<std::string, std::string> header;
  std::map<std::string, std::vector<std::string>> categories;
  std::string section;
  std::vector<std::pair<std::string, std::string>> rows;
  while (reader.next(line)) {
    const auto n = reader.line_no();
    if (line.front() == '[') {
      if (!section.empty()) throw ParseError("only one section is allowed", n);
      if (line.back() != ']') throw ParseError("malformed section header", n);
      section = line.substr(1, line.size() - 2);
      continue;
    }
    auto f = split_csv(line, n);
    if (section.empty()) {
      if (f.size() == 3 && f[0] == "category") {
        categories[f[1]] = split(f[2], '|');
        continue;
      }
      if (f.size() != 2) throw ParseError("header lines must be key,value", n);
      header[f[0]] = f[1];
    } else {
      if (f.size() != 2) throw ParseError("section rows must have two fields", n);
      rows.emplace_back(f[0], f[1]);
    }
  }
  if (provenance) *provenance = reader.provenance;
  auto need = [&](const std::string& key) -> const std::string& {
    auto it = header.find(key);
    if (it == header.end()) throw ParseError(fmt::format("model file lacks '{}'", key));
    return it->second;
  };
  ChoiceModel model;
  const std::string& role = need("role");
  if (role == "core") model.role = ModelRole::core;
  else if (role == "adopt") model.role = ModelRole::adopt;
  else throw ParseError(fmt::format("unknown role '{}'", role));
  const std::string& kind = need("kind");

  if (kind == "logit" || kind == "ground_truth") {
    if (section != "weights") throw ParseError("logit model needs a [weights] section");
    LogitModel m;
    m.encoder.schema = ContextSchema::from_signature(need("schema"));
    m.encoder.path_features = parse_flag(need("path_features"));
    m.encoder.categories = categories;
    for (const auto& f : m.encoder.schema.features)
      if (f.kind == FeatureKind::categorical && !categories.count(f.name))
        throw ParseError(fmt::format("categorical feature '{}' lacks a category line", f.name));
    m.class_weight = parse_double(need("class_weight"));
    m.l2_c = parse_double(need("l2_c"));
    m.intercept = parse_double(need("intercept"));
    auto names = m.encoder.encoded_names();
    if (rows.size() != names.size())
      throw ParseError(fmt::format("expected {} weights, got {}", names.size(), rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].first != names[i])
        throw ParseError(fmt::format("weight {} is for '{}', expected '{}'", i, rows[i].first, names[i]));
      m.weights.push_back(parse_double(rows[i].second));
    }
    if (kind == "logit") model.body = std::move(m);
    else model.body = GroundTruthModel{std::move(m)};
  } else if (kind == "rule_based" && model.role == ModelRole::core) {
    StationProximityRule r;
    r.walk_minutes = parse_double(need("walk_minutes"));
    r.walk_speed = parse_double(need("walk_speed"));
    r.p_near = parse_double(need("p_near"));
    r.p_far = parse_double(need("p_far"));
    for (const auto& [x, y] : rows) r.stations.push_back({parse_double(x), parse_double(y)});
    model.body = std::move(r);
  } else if (kind == "rule_based") {
    TravelTimeRule r;
    r.bands.clear();
    r.fallback = parse_double(need("fallback"));
    r.transfer_factor = parse_double(need("transfer_factor"));
    for (const auto& [limit, p] : rows) r.bands.emplace_back(parse_double(limit), parse_double(p));
    model.body = std::move(r);
  } else if (kind == "table") {
    TableModel t;
    for (const auto& [key, p] : rows) {
      double v = parse_double(p);
      if (!(v >= 0.0 && v <= 1.0)) throw ParseError(fmt::format("probability for '{}' outside [0,1]", key));
      t.probabilities[key] = v;
    }
    model.body = std::move(t);
  } else {
    throw ParseError(fmt::format("unknown model kind '{}'", kind));
  }
  return model;
}

inline ChoiceModel load_model(const std::filesystem::path& file, Provenance* provenance = nullptr) {
  auto in = open_input(file);
  return read_model(in, provenance);
}

/// Content hash of the canonical serialization, recorded in scenario headers.
inline std::string model_fingerprint(const ChoiceModel& model) { return hex64(fnv1a64(write_model(model))); }

}  // namespace tnd
