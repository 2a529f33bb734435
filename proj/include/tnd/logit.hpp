#pragma once

// Class-weighted, L2-regularized logistic regression fitted by Newton's
// method, with grid-search k-fold cross-validation.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "tnd/choice.hpp"
#include "tnd/errors.hpp"
#include "tnd/rng.hpp"

namespace tnd {

struct LabeledRow {
  ContextVector context;
  std::optional<PathFeatures> path;
  bool label = false;
};

struct LabeledDataset {
  ContextSchema schema;
  bool path_features = false;
  std::vector<LabeledRow> rows;
};

inline double softplus(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

/// Negative class-weighted log-likelihood plus ridge penalty:
///   sum_i w_i * (log(1 + e^{z_i}) - y_i z_i) + ||beta||^2 / (2C),  z = X beta + b.
/// Parameters are packed as [beta..., b]; the intercept is not penalized.
class WeightedLogitObjective {
 public:
  WeightedLogitObjective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double class_weight, double l2_c)
      : x_(x), y_(y), inv_c_(1.0 / l2_c), sample_weight_(y.size()) {
    for (Eigen::Index i = 0; i < y.size(); ++i) sample_weight_[i] = y[i] > 0.5 ? class_weight : 1.0;
  }

  Eigen::Index dimension() const { return x_.cols() + 1; }

  double value(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd z = margins(theta);
    double v = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) v += sample_weight_[i] * (softplus(z[i]) - y_[i] * z[i]);
    auto beta = theta.head(x_.cols());
    return v + 0.5 * inv_c_ * beta.squaredNorm();
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd z = margins(theta);
    Eigen::VectorXd r(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) r[i] = sample_weight_[i] * (sigmoid(z[i]) - y_[i]);
    Eigen::VectorXd g(dimension());
    g.head(x_.cols()) = x_.transpose() * r + inv_c_ * theta.head(x_.cols());
    g[x_.cols()] = r.sum();
    return g;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd z = margins(theta);
    Eigen::VectorXd s(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      double p = sigmoid(z[i]);
      s[i] = sample_weight_[i] * p * (1.0 - p);
    }
    const Eigen::Index d = x_.cols();
    Eigen::MatrixXd h(d + 1, d + 1);
    Eigen::MatrixXd xs = x_.transpose() * s.asDiagonal();
    h.topLeftCorner(d, d) = xs * x_;
    h.topLeftCorner(d, d).diagonal().array() += inv_c_;
    Eigen::VectorXd cross = xs.rowwise().sum();
    h.topRightCorner(d, 1) = cross;
    h.bottomLeftCorner(1, d) = cross.transpose();
    h(d, d) = s.sum();
    return h;
  }

 private:
  Eigen::VectorXd margins(const Eigen::VectorXd& theta) const {
    return (x_ * theta.head(x_.cols())).array() + theta[x_.cols()];
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  double inv_c_;
  Eigen::VectorXd sample_weight_;
};

/// Newton iterations with backtracking line search. Returns [beta..., b].
inline Eigen::VectorXd fit_weighted_logit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double class_weight,
                                          double l2_c, int max_iterations = 100) {
  WeightedLogitObjective f(x, y, class_weight, l2_c);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(f.dimension());
  double value = f.value(theta);
  const double scale = std::max(1.0, static_cast<double>(y.size()));
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd g = f.gradient(theta);
    if (g.lpNorm<Eigen::Infinity>() <= 1e-11 * scale) break;
    Eigen::MatrixXd h = f.hessian(theta);
    h.diagonal().array() += 1e-12 * (1.0 + h.diagonal().array().abs());
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    Eigen::VectorXd step = ldlt.info() == Eigen::Success ? Eigen::VectorXd(ldlt.solve(-g)) : Eigen::VectorXd(-g);
    if (!step.allFinite() || step.dot(g) >= 0) step = -g;
    double t = 1.0;
    double next = f.value(theta + step);
    while (!(next <= value + 1e-4 * t * step.dot(g)) && t > 1e-12) {
      t *= 0.5;
      next = f.value(theta + t * step);
    }
    if (t <= 1e-12) break;
    theta += t * step;
    bool converged = std::abs(value - next) <= 1e-15 * std::max(1.0, std::abs(value));
    value = next;
    if (converged) break;
  }
  return theta;
}

// --- metrics -----------------------------------------------------------------

struct Confusion {
  double tp = 0, fp = 0, tn = 0, fn = 0;
};

inline Confusion confusion(const std::vector<bool>& truth, const std::vector<bool>& predicted) {
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i]) (predicted[i] ? c.tp : c.fn) += 1;
    else (predicted[i] ? c.fp : c.tn) += 1;
  }
  return c;
}

inline double f1_of(double tp, double fp, double fn) {
  double denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2 * tp / denom;
}

/// F1 of the positive class.
inline double f1_score(const std::vector<bool>& truth, const std::vector<bool>& predicted) {
  auto c = confusion(truth, predicted);
  return f1_of(c.tp, c.fp, c.fn);
}

/// Support-weighted mean of the per-class F1 scores.
inline double weighted_f1_score(const std::vector<bool>& truth, const std::vector<bool>& predicted) {
  auto c = confusion(truth, predicted);
  double pos = c.tp + c.fn, neg = c.tn + c.fp;
  if (pos + neg == 0) return 0.0;
  return (pos * f1_of(c.tp, c.fp, c.fn) + neg * f1_of(c.tn, c.fn, c.fp)) / (pos + neg);
}

inline double accuracy_score(const std::vector<bool>& truth, const std::vector<bool>& predicted) {
  if (truth.empty()) return 0.0;
  auto c = confusion(truth, predicted);
  return (c.tp + c.tn) / static_cast<double>(truth.size());
}

/// ROC AUC via the rank-sum statistic; tied scores share their average rank.
inline double roc_auc(const std::vector<bool>& truth, const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0, pos = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (truth[order[k]]) {
        rank_sum += avg_rank;
        pos += 1;
      }
    i = j;
  }
  double neg = static_cast<double>(truth.size()) - pos;
  if (pos == 0 || neg == 0) return 0.5;
  return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

// --- training ------------------------------------------------------------------

enum class CvMetric { f1, weighted_f1 };

struct LogitGrid {
  std::vector<double> l2_c{0.1, 0.8, 1.0, 10.0};
  std::vector<double> class_weights{1.0};
  std::vector<int> max_iterations{100, 500, 2000};
  CvMetric metric = CvMetric::f1;

  /// Grid used for core-demand models: no class weighting, plain F1.
  static LogitGrid for_core() { return {}; }
  /// Grid used for adoption models: 1:2 .. 1:10 class weights, weighted F1.
  static LogitGrid for_adopt() {
    LogitGrid g;
    g.class_weights = {2.0, 3.0, 5.0, 10.0};
    g.metric = CvMetric::weighted_f1;
    return g;
  }
};

struct CvEntry {
  double l2_c = 1.0;
  double class_weight = 1.0;
  int max_iterations = 100;
  std::vector<double> fold_scores;
  double mean_score = 0.0;
};

struct CvReport {
  std::vector<CvEntry> entries;
  std::size_t best = 0;
};

struct TrainResult {
  LogitModel model;
  CvReport report;
};

struct EncodedData {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

inline EncodedData encode_dataset(const FeatureEncoder& encoder, const LabeledDataset& data) {
  const auto width = static_cast<Eigen::Index>(encoder.width());
  EncodedData out{Eigen::MatrixXd(static_cast<Eigen::Index>(data.rows.size()), width),
                  Eigen::VectorXd(static_cast<Eigen::Index>(data.rows.size()))};
  std::vector<double> buf;
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    const auto& row = data.rows[i];
    encoder.encode_into(row.context, row.path ? &*row.path : nullptr, buf);
    for (Eigen::Index j = 0; j < width; ++j) out.x(static_cast<Eigen::Index>(i), j) = buf[static_cast<std::size_t>(j)];
    out.y[static_cast<Eigen::Index>(i)] = row.label ? 1.0 : 0.0;
  }
  return out;
}

inline LogitModel fit_logit(const FeatureEncoder& encoder, const EncodedData& data, double class_weight, double l2_c,
                            int max_iterations) {
  Eigen::VectorXd theta = fit_weighted_logit(data.x, data.y, class_weight, l2_c, max_iterations);
  LogitModel m;
  m.encoder = encoder;
  m.weights.assign(theta.data(), theta.data() + theta.size() - 1);
  m.intercept = theta[theta.size() - 1];
  m.class_weight = class_weight;
  m.l2_c = l2_c;
  return m;
}

/// Stratified fold labels: positives and negatives are shuffled separately and dealt round-robin.
inline std::vector<int> stratified_folds(const Eigen::VectorXd& y, int folds, std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (Eigen::Index i = 0; i < y.size(); ++i) (y[i] > 0.5 ? pos : neg).push_back(static_cast<std::size_t>(i));
  Rng rng(seed, Stream::labels);
  auto shuffle = [&](std::vector<std::size_t>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
  };
  shuffle(pos);
  shuffle(neg);
  std::vector<int> fold(static_cast<std::size_t>(y.size()), 0);
  for (std::size_t i = 0; i < pos.size(); ++i) fold[pos[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
  for (std::size_t i = 0; i < neg.size(); ++i) fold[neg[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
  return fold;
}

inline TrainResult train_logit(const LabeledDataset& data, const LogitGrid& grid, int folds = 5,
                               std::uint64_t seed = 0) {
  if (folds < 2) throw TrainingError("cross-validation needs at least two folds");
  std::size_t positives = 0;
  for (const auto& r : data.rows) positives += r.label ? 1 : 0;
  if (positives == 0 || positives == data.rows.size()) throw TrainingError("training data contains a single class");

  std::vector<const ContextVector*> contexts;
  for (const auto& r : data.rows) contexts.push_back(&r.context);
  FeatureEncoder encoder = FeatureEncoder::fit(data.schema, contexts, data.path_features);
  EncodedData all = encode_dataset(encoder, data);
  auto fold_of = stratified_folds(all.y, folds, seed);

  auto subset = [&](int fold, bool holdout) {
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
      if ((fold_of[i] == fold) == holdout) idx.push_back(static_cast<Eigen::Index>(i));
    EncodedData d{Eigen::MatrixXd(static_cast<Eigen::Index>(idx.size()), all.x.cols()),
                  Eigen::VectorXd(static_cast<Eigen::Index>(idx.size()))};
    for (std::size_t k = 0; k < idx.size(); ++k) {
      d.x.row(static_cast<Eigen::Index>(k)) = all.x.row(idx[k]);
      d.y[static_cast<Eigen::Index>(k)] = all.y[idx[k]];
    }
    return d;
  };
  std::vector<EncodedData> train_parts, valid_parts;
  for (int f = 0; f < folds; ++f) {
    train_parts.push_back(subset(f, false));
    valid_parts.push_back(subset(f, true));
  }

  CvReport report;
  double best_score = -1.0;
  for (double c : grid.l2_c) {
    for (double w : grid.class_weights) {
      for (int iters : grid.max_iterations) {
        CvEntry entry{c, w, iters, {}, 0.0};
        for (int f = 0; f < folds; ++f) {
          Eigen::VectorXd theta = fit_weighted_logit(train_parts[f].x, train_parts[f].y, w, c, iters);
          Eigen::VectorXd z = (valid_parts[f].x * theta.head(theta.size() - 1)).array() + theta[theta.size() - 1];
          std::vector<bool> truth, pred;
          for (Eigen::Index i = 0; i < z.size(); ++i) {
            truth.push_back(valid_parts[f].y[i] > 0.5);
            pred.push_back(sigmoid(z[i]) >= 0.5);
          }
          entry.fold_scores.push_back(grid.metric == CvMetric::f1 ? f1_score(truth, pred)
                                                                  : weighted_f1_score(truth, pred));
        }
        entry.mean_score = std::accumulate(entry.fold_scores.begin(), entry.fold_scores.end(), 0.0) / folds;
        if (entry.mean_score > best_score) {
          best_score = entry.mean_score;
          report.best = report.entries.size();
        }
        report.entries.push_back(std::move(entry));
      }
    }
  }
  const CvEntry& best = report.entries[report.best];
  return {fit_logit(encoder, all, best.class_weight, best.l2_c, best.max_iterations), std::move(report)};
}

}  // namespace tnd
