#include <doctest.h>

#include <random>

#include "sexism_alert/evaluation.hpp"

using namespace sexism_alert;

namespace {

// Independent tally: per-class precision/recall/F1 from the label vectors.
struct Tally {
  Ratio precision, recall, f1;
  bool p_deg = false, r_deg = false, f_deg = false;
};

Ratio safe(std::int64_t num, std::int64_t den, bool& degenerate) {
  if (den == 0) {
    degenerate = true;
    return Ratio(0);
  }
  return Ratio(num, den);
}

Tally tally(const std::vector<Label>& pred, const std::vector<Label>& gold, Label positive) {
  std::int64_t predicted = 0, actual = 0, hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    predicted += pred[i] == positive;
    actual += gold[i] == positive;
    hit += pred[i] == positive && gold[i] == positive;
  }
  Tally t;
  t.precision = safe(hit, predicted, t.p_deg);
  t.recall = safe(hit, actual, t.r_deg);
  t.f1 = safe(2 * hit, predicted + actual, t.f_deg);
  return t;
}

}  // namespace

TEST_CASE("count_confusion") {
  const std::vector<Label> pred{Label::kSexist, Label::kSexist, Label::kNotSexist,
                                Label::kNotSexist};
  const std::vector<Label> gold{Label::kSexist, Label::kNotSexist, Label::kNotSexist,
                                Label::kSexist};
  const ConfusionCounts c = count_confusion(pred, gold);
  CHECK(c == ConfusionCounts{1, 1, 1, 1});
  const std::vector<Label> shorter{Label::kSexist};
  CHECK_THROWS_AS(count_confusion(shorter, gold), Error);
}

TEST_CASE("all-correct predictions") {
  const Metrics m = compute_metrics({30, 0, 70, 0});
  CHECK(m.accuracy.value == 1.0);
  CHECK(m.sexist.f1.value == 1.0);
  CHECK(m.not_sexist.f1.value == 1.0);
  CHECK(m.macro.f1.value == 1.0);
  CHECK_FALSE(m.degenerate());
}

TEST_CASE("fixture with both classes at 0.75") {
  const Metrics m = compute_metrics({3, 1, 3, 1});
  for (const ClassMetrics* c : {&m.sexist, &m.not_sexist, &m.macro, &m.weighted}) {
    CHECK(c->precision.exact == Ratio(3, 4));
    CHECK(c->recall.exact == Ratio(3, 4));
    CHECK(c->f1.exact == Ratio(3, 4));
  }
  CHECK(m.accuracy.exact == Ratio(3, 4));
  const std::string table = render_metrics_table(m);
  CHECK(table.find("0.75") != std::string::npos);
  CHECK(table.find("0.7500") == std::string::npos);
}

TEST_CASE("degenerate: model never predicts sexist") {
  const Metrics m = compute_metrics({0, 0, 90, 10});
  CHECK(m.sexist.precision.degenerate);
  CHECK(m.sexist.precision.value == 0.0);
  CHECK(m.sexist.recall.value == 0.0);
  CHECK(m.degenerate());
  CHECK(to_json(m)["degenerate"].get<bool>());
}

TEST_CASE("compute_metrics matches a brute-force tally") {
  std::mt19937_64 rng(2023);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 50;
    std::vector<Label> pred(n), gold(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = (rng() & 1U) ? Label::kSexist : Label::kNotSexist;
      gold[i] = (rng() % 3 == 0) ? Label::kSexist : Label::kNotSexist;
    }
    const Metrics m = compute_metrics(count_confusion(pred, gold));
    const Tally pos = tally(pred, gold, Label::kSexist);
    const Tally neg = tally(pred, gold, Label::kNotSexist);
    CHECK(m.sexist.precision.exact == pos.precision);
    CHECK(m.sexist.recall.exact == pos.recall);
    CHECK(m.sexist.f1.exact == pos.f1);
    CHECK(m.not_sexist.precision.exact == neg.precision);
    CHECK(m.not_sexist.recall.exact == neg.recall);
    CHECK(m.not_sexist.f1.exact == neg.f1);
    CHECK(m.sexist.precision.degenerate == pos.p_deg);
    CHECK(m.macro.f1.exact == (pos.f1 + neg.f1) / 2);

    std::int64_t correct = 0, sp = 0;
    for (std::size_t i = 0; i < n; ++i) {
      correct += pred[i] == gold[i];
      sp += gold[i] == Label::kSexist;
    }
    const auto sn = static_cast<std::int64_t>(n) - sp;
    CHECK(m.accuracy.exact == Ratio(correct, static_cast<std::int64_t>(n)));
    CHECK(m.micro_precision.exact == m.accuracy.exact);
    CHECK(m.weighted.recall.exact ==
          (pos.recall * sp + neg.recall * sn) / static_cast<std::int64_t>(n));
    CHECK(m.sexist.f1.value == doctest::Approx(boost::rational_cast<double>(pos.f1)));
  }
}

TEST_CASE("metrics are symmetric under class relabeling") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const ConfusionCounts c{rng() % 20, rng() % 20, rng() % 20, rng() % 20};
    if (c.total() == 0) continue;
    const Metrics a = compute_metrics(c);
    const Metrics b = compute_metrics(c.swapped());
    CHECK(a.sexist.f1.exact == b.not_sexist.f1.exact);
    CHECK(a.sexist.precision.exact == b.not_sexist.precision.exact);
    CHECK(a.macro.f1.exact == b.macro.f1.exact);
    CHECK(a.accuracy.exact == b.accuracy.exact);
  }
}

TEST_CASE("normalized confusion rows sum to one") {
  const std::vector<Label> gold{Label::kSexist, Label::kSexist, Label::kSexist,
                                Label::kNotSexist};
  const std::vector<Label> pred{Label::kSexist, Label::kNotSexist, Label::kSexist,
                                Label::kNotSexist};
  const NormalizedConfusion c = normalized_confusion_matrix(pred, gold);
  CHECK(c.matrix(0, 0) == doctest::Approx(2.0 / 3));
  CHECK(c.matrix(0, 1) == doctest::Approx(1.0 / 3));
  CHECK(c.matrix(1, 1) == 1.0);
  CHECK(c.matrix.rowwise().sum().isApproxToConstant(1.0));

  const std::vector<Label> only_neg{Label::kNotSexist};
  const NormalizedConfusion z = normalized_confusion_matrix(only_neg, only_neg);
  CHECK(z.zero_support[0]);
  CHECK(z.matrix.row(0).isZero());
}
