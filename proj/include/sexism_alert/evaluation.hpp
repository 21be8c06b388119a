#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include <Eigen/Dense>
#include <boost/rational.hpp>

#include "sexism_alert/common.hpp"
#include "sexism_alert/labels.hpp"

namespace sexism_alert {

/// Binary confusion counts with "sexist" as the positive class.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  /// The same counts with "not_sexist" as the positive class.
  ConfusionCounts swapped() const { return {tn, fn, tp, fp}; }

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// kInvalidArgument on a length mismatch.
ConfusionCounts count_confusion(std::span<const Label> predictions,
                                std::span<const Label> golds);

using Ratio = boost::rational<std::int64_t>;

/// A metric value: the exact ratio plus its nearest double. A ratio with a
/// zero denominator is reported as 0 and flagged degenerate.
struct MetricValue {
  Ratio exact{0};
  double value = 0.0;
  bool degenerate = false;
};

struct ClassMetrics {
  MetricValue precision;
  MetricValue recall;
  MetricValue f1;
  std::uint64_t support = 0;
};

struct Metrics {
  ConfusionCounts counts;
  MetricValue accuracy;
  ClassMetrics sexist;
  ClassMetrics not_sexist;
  /// Unweighted mean of the two classes.
  ClassMetrics macro;
  /// Support-weighted mean of the two classes.
  ClassMetrics weighted;
  /// Pooled precision / recall; both equal accuracy for single-label binary
  /// classification.
  MetricValue micro_precision;
  MetricValue micro_recall;

  bool degenerate() const;
};

Metrics compute_metrics(const ConfusionCounts& counts);

struct NormalizedConfusion {
  /// Rows: true class, columns: predicted class; index 0 = sexist,
  /// 1 = not_sexist. Rows with zero support are all zero.
  Eigen::Matrix2d matrix = Eigen::Matrix2d::Zero();
  std::array<bool, 2> zero_support{true, true};
};

NormalizedConfusion normalized_confusion_matrix(std::span<const Label> predictions,
                                                std::span<const Label> golds);

json to_json(const Metrics& metrics);
json to_json(const NormalizedConfusion& confusion);

/// Rows No sexist / Yes sexist / Global; columns Precision / Recall / F1.
std::string render_metrics_table(const Metrics& metrics);

}  // namespace sexism_alert
