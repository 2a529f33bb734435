#pragma once

// Rider choice models. A core model gives P(trip is core | context); an
// adoption model gives P(latent trip adopts path | context, path). Models are
// deterministic functions; all randomness lives in scenario sampling.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "tnd/demand.hpp"
#include "tnd/errors.hpp"
#include "tnd/path_features.hpp"

namespace tnd {

enum class ModelRole { core, adopt };

inline std::string_view to_string(ModelRole r) { return r == ModelRole::core ? "core" : "adopt"; }

inline double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

inline double clamp_probability(double p) {
  if (std::isnan(p)) throw std::domain_error("choice model produced NaN");
  return std::clamp(p, 0.0, 1.0);
}

/// Maps a context (and, for adoption models, path features) to a numeric
/// vector: numeric features as-is, ordinal features as their integer code,
/// categorical features one-hot with the first category as reference.
struct FeatureEncoder {
  ContextSchema schema;
  std::map<std::string, std::vector<std::string>> categories;  // sorted; front() is the reference level
  bool path_features = false;

  static constexpr std::string_view kPathFeatureNames[] = {"path_total_min", "path_transfers", "path_walk_min",
                                                          "path_in_vehicle_min"};

  /// Collects the category levels of every categorical feature from `contexts`.
  static FeatureEncoder fit(const ContextSchema& schema, const std::vector<const ContextVector*>& contexts,
                            bool path_features) {
    FeatureEncoder enc;
    enc.schema = schema;
    enc.path_features = path_features;
    for (std::size_t i = 0; i < schema.features.size(); ++i) {
      if (schema.features[i].kind != FeatureKind::categorical) continue;
      std::set<std::string> levels;
      for (const ContextVector* x : contexts) levels.insert(x->category(i));
      enc.categories[schema.features[i].name] = {levels.begin(), levels.end()};
    }
    return enc;
  }

  std::vector<std::string> encoded_names() const {
    std::vector<std::string> names;
    for (const auto& f : schema.features) {
      if (f.kind != FeatureKind::categorical) {
        names.push_back(f.name);
        continue;
      }
      const auto& levels = categories.at(f.name);
      for (std::size_t j = 1; j < levels.size(); ++j) names.push_back(f.name + "=" + levels[j]);
    }
    if (path_features)
      for (auto n : kPathFeatureNames) names.emplace_back(n);
    return names;
  }

  std::size_t width() const { return encoded_names().size(); }

  void encode_into(const ContextVector& x, const PathFeatures* pf, std::vector<double>& out) const {
    check_context(x, schema);
    out.clear();
    for (std::size_t i = 0; i < schema.features.size(); ++i) {
      const auto& f = schema.features[i];
      if (f.kind != FeatureKind::categorical) {
        out.push_back(x.numeric(i));
        continue;
      }
      const auto& levels = categories.at(f.name);
      const std::string& v = x.category(i);
      for (std::size_t j = 1; j < levels.size(); ++j) out.push_back(v == levels[j] ? 1.0 : 0.0);
    }
    if (path_features) {
      if (!pf) throw SchemaError("adoption model requires path features");
      out.push_back(pf->total_minutes);
      out.push_back(static_cast<double>(pf->transfers));
      out.push_back(pf->walk_minutes);
      out.push_back(pf->in_vehicle_minutes);
    }
  }

  std::vector<double> encode(const ContextVector& x, const PathFeatures* pf = nullptr) const {
    std::vector<double> out;
    encode_into(x, pf, out);
    return out;
  }

  bool operator==(const FeatureEncoder&) const = default;
};

/// Binary logit: P(y = 1) = sigmoid(intercept + weights . encode(x)).
struct LogitModel {
  FeatureEncoder encoder;
  std::vector<double> weights;
  double intercept = 0.0;
  double class_weight = 1.0;  // positive-class loss multiplier used in training
  double l2_c = 1.0;          // inverse regularization strength used in training

  double probability(const ContextVector& x, const PathFeatures* pf = nullptr) const {
    auto v = encoder.encode(x, pf);
    if (v.size() != weights.size())
      throw SchemaError(fmt::format("encoded width {} != weight count {}", v.size(), weights.size()));
    double t = intercept;
    for (std::size_t i = 0; i < v.size(); ++i) t += weights[i] * v[i];
    return clamp_probability(sigmoid(t));
  }
  double weight_of(std::string_view name) const {
    auto names = encoder.encoded_names();
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return weights[i];
    throw SchemaError(fmt::format("no encoded feature '{}'", name));
  }
};

/// Synthetic "true" process: a logit with declared parameters. For adoption
/// the weight on total path time must be non-positive, so longer paths are
/// never more attractive.
struct GroundTruthModel {
  LogitModel logit;
};

/// Core rule: both trip ends within a short walk of a rail station -> p_near, else p_far.
struct StationProximityRule {
  std::vector<Point> stations;
  double walk_minutes = 5.0;
  double walk_speed = 80.0;
  double p_near = 0.8;
  double p_far = 0.2;

  bool near_station(Point p) const {
    const double reach = walk_minutes * walk_speed;
    return std::any_of(stations.begin(), stations.end(), [&](Point s) { return distance(s, p) <= reach; });
  }
};

/// Adoption rule: nested travel-time bands. The first band whose upper time
/// bound covers the path's total time gives the probability; each transfer
/// multiplies it by `transfer_factor`.
struct TravelTimeRule {
  std::vector<std::pair<double, double>> bands{{30.0, 0.5}, {45.0, 0.3}, {60.0, 0.15}};
  double fallback = 0.05;
  double transfer_factor = 1.0;
};

/// Externally produced probabilities keyed by trip id (core) or path id (adopt).
struct TableModel {
  std::map<std::string, double> probabilities;
};

using ModelBody = std::variant<LogitModel, GroundTruthModel, StationProximityRule, TravelTimeRule, TableModel>;

struct ChoiceModel {
  ModelRole role = ModelRole::core;
  ModelBody body;

  std::string_view kind() const {
    switch (body.index()) {
      case 0: return "logit";
      case 1: return "ground_truth";
      case 2:
      case 3: return "rule_based";
      default: return "table";
    }
  }
};

inline ChoiceModel constant_model(ModelRole role, double p) {
  // A logit with no features and a saturating intercept is awkward for 0/1;
  // a travel-time rule with no bands returns its fallback for every path.
  if (role == ModelRole::adopt) return {role, TravelTimeRule{{}, p, 1.0}};
  return {role, StationProximityRule{{}, 0.0, 1.0, p, p}};
}

/// P(C_r = 1 | x_r).
inline double prob_core(const ChoiceModel& model, const Trip& trip) {
  if (model.role != ModelRole::core) throw SchemaError("model is not a core-demand model");
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LogitModel>) {
          return m.probability(trip.context);
        } else if constexpr (std::is_same_v<T, GroundTruthModel>) {
          return m.logit.probability(trip.context);
        } else if constexpr (std::is_same_v<T, StationProximityRule>) {
          return clamp_probability(m.near_station(trip.origin) && m.near_station(trip.dest) ? m.p_near : m.p_far);
        } else if constexpr (std::is_same_v<T, TableModel>) {
          auto it = m.probabilities.find(trip.id);
          if (it == m.probabilities.end()) throw StructuralError(fmt::format("table has no entry for trip '{}'", trip.id));
          return clamp_probability(it->second);
        } else {
          throw SchemaError("travel-time rule is an adoption model");
        }
      },
      model.body);
}

/// P(latent trip adopts the path | x_r, path features).
inline double prob_adopt(const ChoiceModel& model, const Trip& trip, std::string_view path_id,
                         const PathFeatures& pf) {
  if (model.role != ModelRole::adopt) throw SchemaError("model is not an adoption model");
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LogitModel>) {
          return m.probability(trip.context, &pf);
        } else if constexpr (std::is_same_v<T, GroundTruthModel>) {
          return m.logit.probability(trip.context, &pf);
        } else if constexpr (std::is_same_v<T, TravelTimeRule>) {
          double p = m.fallback;
          for (const auto& [limit, prob] : m.bands) {
            if (pf.total_minutes <= limit) {
              p = prob;
              break;
            }
          }
          return clamp_probability(p * std::pow(m.transfer_factor, pf.transfers));
        } else if constexpr (std::is_same_v<T, TableModel>) {
          auto it = m.probabilities.find(std::string(path_id));
          if (it == m.probabilities.end())
            throw StructuralError(fmt::format("table has no entry for path '{}'", path_id));
          return clamp_probability(it->second);
        } else {
          throw SchemaError("station-proximity rule is a core-demand model");
        }
      },
      model.body);
}

/// U_r: a trip uses transit if it is core, or if it is latent and adopts a feasible path.
constexpr bool compose_usage(bool core, bool adopts_feasible) { return core || adopts_feasible; }

/// E[U_r | z] with independent per-path adoption over the feasible considered paths.
inline double exact_usage_expectation(double p_core, const std::vector<double>& adopt_probs) {
  double reject_all = 1.0;
  for (double q : adopt_probs) reject_all *= 1.0 - q;
  return p_core + (1.0 - p_core) * (1.0 - reject_all);
}

}  // namespace tnd
