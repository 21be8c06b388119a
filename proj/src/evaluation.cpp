#include "sexism_alert/evaluation.hpp"

#include <iomanip>
#include <sstream>

namespace sexism_alert {

ConfusionCounts count_confusion(std::span<const Label> predictions,
                                std::span<const Label> golds) {
  if (predictions.size() != golds.size()) {
    fail(ErrorKind::kInvalidArgument,
         "predictions and gold labels differ in length (" +
             std::to_string(predictions.size()) + " vs " + std::to_string(golds.size()) + ")");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool predicted = predictions[i] == Label::kSexist;
    const bool actual = golds[i] == Label::kSexist;
    if (predicted && actual) {
      ++c.tp;
    } else if (predicted) {
      ++c.fp;
    } else if (actual) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

namespace {

MetricValue from_ratio(Ratio r) {
  return {r, boost::rational_cast<double>(r), false};
}

MetricValue ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return {Ratio(0), 0.0, true};
  return from_ratio(Ratio(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den)));
}

// Per-class metrics with `tp`, `fp`, `fn` taken relative to that class.
ClassMetrics class_metrics(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  ClassMetrics m;
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  // 2PR/(P+R) reduces to 2tp/(2tp+fp+fn); the integer form keeps it exact.
  m.f1 = ratio(2 * tp, 2 * tp + fp + fn);
  // boost 1.74 recurses on rational == int under C++20 operator rewriting.
  if ((m.precision.exact + m.recall.exact).numerator() == 0) m.f1.degenerate = true;
  m.support = tp + fn;
  return m;
}

MetricValue mean(const MetricValue& a, const MetricValue& b, std::uint64_t wa,
                 std::uint64_t wb) {
  if (wa + wb == 0) return {Ratio(0), 0.0, true};
  const Ratio r = (a.exact * static_cast<std::int64_t>(wa) +
                   b.exact * static_cast<std::int64_t>(wb)) /
                  static_cast<std::int64_t>(wa + wb);
  MetricValue v = from_ratio(r);
  v.degenerate = a.degenerate || b.degenerate;
  return v;
}

ClassMetrics average(const ClassMetrics& a, const ClassMetrics& b, std::uint64_t wa,
                     std::uint64_t wb) {
  ClassMetrics m;
  m.precision = mean(a.precision, b.precision, wa, wb);
  m.recall = mean(a.recall, b.recall, wa, wb);
  m.f1 = mean(a.f1, b.f1, wa, wb);
  m.support = a.support + b.support;
  return m;
}

json to_json(const MetricValue& v) { return v.value; }

json to_json(const ClassMetrics& m) {
  return {{"precision", m.precision.value},
          {"recall", m.recall.value},
          {"f1", m.f1.value},
          {"support", m.support}};
}

}  // namespace

bool Metrics::degenerate() const {
  for (const ClassMetrics* m : {&sexist, &not_sexist}) {
    if (m->precision.degenerate || m->recall.degenerate || m->f1.degenerate) return true;
  }
  return accuracy.degenerate;
}

Metrics compute_metrics(const ConfusionCounts& c) {
  Metrics m;
  m.counts = c;
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.sexist = class_metrics(c.tp, c.fp, c.fn);
  m.not_sexist = class_metrics(c.tn, c.fn, c.fp);
  m.macro = average(m.sexist, m.not_sexist, 1, 1);
  m.weighted = average(m.sexist, m.not_sexist, m.sexist.support, m.not_sexist.support);
  // Pooled over both classes every error is one FP and one FN.
  m.micro_precision = ratio(c.tp + c.tn, c.total());
  m.micro_recall = ratio(c.tp + c.tn, c.total());
  return m;
}

NormalizedConfusion normalized_confusion_matrix(std::span<const Label> predictions,
                                                std::span<const Label> golds) {
  const ConfusionCounts c = count_confusion(predictions, golds);
  NormalizedConfusion out;
  Eigen::Matrix2d counts;
  counts << static_cast<double>(c.tp), static_cast<double>(c.fn),
      static_cast<double>(c.fp), static_cast<double>(c.tn);
  for (Eigen::Index row = 0; row < 2; ++row) {
    const double support = counts.row(row).sum();
    if (support > 0.0) {
      out.matrix.row(row) = counts.row(row) / support;
      out.zero_support[static_cast<std::size_t>(row)] = false;
    }
  }
  return out;
}

json to_json(const Metrics& m) {
  return {{"counts", {{"tp", m.counts.tp}, {"fp", m.counts.fp}, {"tn", m.counts.tn}, {"fn", m.counts.fn}}},
          {"accuracy", to_json(m.accuracy)},
          {"not_sexist", to_json(m.not_sexist)},
          {"sexist", to_json(m.sexist)},
          {"global", to_json(m.macro)},
          {"global_weighted", to_json(m.weighted)},
          {"degenerate", m.degenerate()}};
}

json to_json(const NormalizedConfusion& c) {
  return {{"labels", {"sexist", "not_sexist"}},
          {"matrix",
           {{c.matrix(0, 0), c.matrix(0, 1)}, {c.matrix(1, 0), c.matrix(1, 1)}}},
          {"zero_support", {c.zero_support[0], c.zero_support[1]}}};
}

std::string render_metrics_table(const Metrics& m) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << std::left << std::setw(18) << "Classification" << std::right << std::setw(11)
      << "Precision" << std::setw(9) << "Recall" << std::setw(11) << "F1 score" << "\n";
  auto row = [&](const char* name, const ClassMetrics& c) {
    out << std::left << std::setw(18) << name << std::right << std::setw(11)
        << c.precision.value << std::setw(9) << c.recall.value << std::setw(11)
        << c.f1.value << "\n";
  };
  row("No sexist", m.not_sexist);
  row("Yes sexist", m.sexist);
  row("Global", m.macro);
  row("Global (weighted)", m.weighted);
  out << "Accuracy: " << m.accuracy.value << "  (n=" << m.counts.total() << ")";
  if (m.degenerate()) out << "  [degenerate: some ratios had zero denominators]";
  out << "\n";
  return out.str();
}

}  // namespace sexism_alert
