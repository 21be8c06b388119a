#include <doctest.h>

#include <algorithm>
#include <array>
#include <random>

#include "fixtures.hpp"
#include "sexism_alert/annotation.hpp"

using namespace sexism_alert;
using C = LabelCategory;

namespace {

AnnotationVote vote(std::string comment, std::string annotator, C category) {
  return {std::move(comment), std::move(annotator), category, now_utc(), {}};
}

FinalLabel label(const std::string& id, C category) {
  FinalLabel f;
  f.comment_id = id;
  f.category = category;
  f.vote_counts[static_cast<std::size_t>(category)] = 4;
  f.resolved_by = Resolution::kStrictMajority;
  return f;
}

}  // namespace

TEST_CASE("categories") {
  CHECK(kAllCategories.size() == 4);
  for (C c : kAllCategories) CHECK(parse_category(to_string(c)) == c);
  CHECK_FALSE(parse_category("Maybe"));
  CHECK(suggested_discard_reasons().size() == 8);
}

TEST_CASE("resolve_votes examples") {
  auto resolve = [](std::initializer_list<C> v) {
    const std::vector<C> votes(v);
    return resolve_votes("c", votes);
  };
  auto a = resolve({C::kYes, C::kYes, C::kYes, C::kNo});
  CHECK(a.category == C::kYes);
  CHECK(a.resolved_by == Resolution::kStrictMajority);
  auto b = resolve({C::kYes, C::kYes, C::kNo, C::kNo});
  CHECK(b.category == C::kDependsOnContext);
  CHECK(b.resolved_by == Resolution::kTieRule);
  auto c = resolve({C::kYes, C::kNo, C::kDiscard, C::kDependsOnContext});
  CHECK(c.category == C::kDependsOnContext);
  CHECK(c.resolved_by == Resolution::kTieRule);
  auto d = resolve({C::kDiscard, C::kDiscard, C::kDiscard, C::kYes});
  CHECK(d.category == C::kDiscard);
  CHECK(d.votes() == 4);
}

TEST_CASE("resolve_votes over all 256 panels") {
  for (int code = 0; code < 256; ++code) {
    std::array<C, 4> votes;
    std::array<int, 4> counts{};
    for (int i = 0; i < 4; ++i) {
      votes[i] = static_cast<C>((code >> (2 * i)) & 3);
      counts[static_cast<std::size_t>(votes[i])]++;
    }
    const FinalLabel f = resolve_votes("c", votes);
    int winner = -1;
    for (int k = 0; k < 4; ++k) {
      if (2 * counts[k] > 4) winner = k;
    }
    if (winner >= 0) {
      CHECK(f.category == static_cast<C>(winner));
      CHECK(f.resolved_by == Resolution::kStrictMajority);
    } else {
      CHECK(f.category == C::kDependsOnContext);
      CHECK(f.resolved_by == Resolution::kTieRule);
    }
    for (int k = 0; k < 4; ++k) CHECK(f.vote_counts[k] == static_cast<std::size_t>(counts[k]));
    std::sort(votes.begin(), votes.end());
    do {
      CHECK(resolve_votes("c", votes) == f);
    } while (std::next_permutation(votes.begin(), votes.end()));
  }
}

TEST_CASE("AnnotationBook votes") {
  AnnotationBook book;
  for (const char* a : {"a1", "a2", "a3", "a4"}) book.register_annotator(a);
  book.register_comment("c1");

  SUBCASE("first vote then replacement") {
    auto ack = book.record_vote(vote("c1", "a1", C::kYes));
    CHECK(ack.votes_for_comment == 1);
    CHECK_FALSE(ack.replaced);
    ack = book.record_vote(vote("c1", "a1", C::kNo));
    CHECK(ack.replaced);
    CHECK(book.vote_count("c1") == 1);
    CHECK(book.audit_log("c1").size() == 2);
    CHECK(book.votes_for("c1")[0].category == C::kNo);
  }
  SUBCASE("unknown comment or annotator") {
    try {
      book.record_vote(vote("zz", "a1", C::kYes));
      FAIL("expected not found");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kNotFound);
    }
    try {
      book.record_vote(vote("c1", "intruder", C::kYes));
      FAIL("expected unauthenticated");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kUnauthenticated);
    }
  }
  SUBCASE("incomplete panel") {
    book.record_vote(vote("c1", "a1", C::kYes));
    try {
      book.resolve_label("c1");
      FAIL("expected conflict");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kConflict);
    }
  }
  SUBCASE("resolution freezes until reopened") {
    book.record_vote(vote("c1", "a1", C::kYes));
    book.record_vote(vote("c1", "a2", C::kYes));
    book.record_vote(vote("c1", "a3", C::kYes));
    book.record_vote(vote("c1", "a4", C::kNo));
    const FinalLabel f = book.resolve_label("c1");
    CHECK(f.category == C::kYes);
    CHECK(book.is_frozen("c1"));
    CHECK_THROWS_AS(book.record_vote(vote("c1", "a4", C::kYes)), Error);
    CHECK(book.resolve_label("c1") == f);
    book.reopen("c1");
    book.record_vote(vote("c1", "a4", C::kYes));
    CHECK(book.resolve_label("c1").vote_counts[0] == 4);
  }
  SUBCASE("queue skips voted and frozen comments") {
    book.register_comment("c2");
    book.register_comment("c3");
    book.record_vote(vote("c1", "a1", C::kYes));
    CHECK(book.next_for("a1") == "c2");
    CHECK(book.next_for("a2") == "c1");
  }
}

TEST_CASE("stored labels re-resolve to the same category") {
  std::mt19937_64 rng(4);
  std::vector<AnnotationVote> votes;
  for (int c = 0; c < 50; ++c) {
    for (int a = 0; a < 4; ++a) {
      votes.push_back(vote("c" + std::to_string(c), "a" + std::to_string(a),
                           static_cast<C>(rng() % 4)));
    }
  }
  const AnnotationBook book = book_from_votes(votes);
  const auto finals = book.final_labels();
  CHECK(finals.size() == 50);
  for (const auto& f : finals) {
    std::vector<C> again;
    for (std::size_t k = 0; k < 4; ++k) {
      for (std::size_t i = 0; i < f.vote_counts[k]; ++i) again.push_back(static_cast<C>(k));
    }
    CHECK(resolve_votes(f.comment_id, again) == f);
    CHECK(final_label_from_json(to_json(f)) == f);
  }
}

TEST_CASE("vote JSON") {
  AnnotationVote v = vote("c1", "a1", C::kDiscard);
  v.reason = "sarcasm";
  const AnnotationVote back = vote_from_json(to_json(v));
  CHECK(back.comment_id == "c1");
  CHECK(back.category == C::kDiscard);
  CHECK(back.reason == "sarcasm");
  CHECK(to_json(v)["category"] == "Discard");
  CHECK_THROWS_AS(vote_from_json({{"comment_id", "c"}, {"annotator_id", "a"},
                                  {"category", "Perhaps"}, {"cast_at", "2023-01-01T00:00:00Z"}}),
                  Error);
}

namespace {

// Corpus with a female- and a male-protagonist source of `n` comments each.
Corpus two_source_corpus(std::size_t n) {
  Corpus corpus;
  for (auto [id, g] : {std::pair{"E1", Gender::kFemale}, std::pair{"E2", Gender::kMale}}) {
    ContentSource s = fixtures::reference_source(id);
    s.protagonist_gender = g;
    corpus.add_source(s);
    std::vector<CommentRecord> r;
    for (std::size_t i = 0; i < n; ++i) {
      r.push_back({std::string(id) + "-" + std::to_string(i), "texto " + std::to_string(i), {}});
    }
    corpus.ingest_comments(id, r);
  }
  return corpus;
}

}  // namespace

TEST_CASE("labeling_report") {
  SUBCASE("all No") {
    const Corpus corpus = two_source_corpus(5);
    std::vector<FinalLabel> labels;
    for (const auto& c : corpus.comments()) labels.push_back(label(c.id, C::kNo));
    const auto r = labeling_report(labels, corpus);
    CHECK(r.overall.fraction(C::kNo) == 1.0);
    CHECK(r.overall.fraction(C::kYes) == 0.0);
  }
  SUBCASE("female cell at 11.3% Yes") {
    const Corpus corpus = two_source_corpus(1000);
    std::vector<FinalLabel> labels;
    for (int i = 0; i < 1000; ++i) {
      labels.push_back(label("E1-" + std::to_string(i), i < 113 ? C::kYes : C::kNo));
      labels.push_back(label("E2-" + std::to_string(i), i < 20 ? C::kYes : C::kNo));
    }
    const auto r = labeling_report(labels, corpus);
    const auto* female = r.find("protagonist_gender", "female");
    REQUIRE(female != nullptr);
    CHECK(female->rate == doctest::Approx(0.113));
    CHECK(r.find("protagonist_gender", "male")->rate == doctest::Approx(0.02));
    CHECK(render_labeling_table(r).find("female") != std::string::npos);
  }
}

TEST_CASE("export_training_set") {
  const Corpus corpus = two_source_corpus(10);
  std::vector<FinalLabel> labels;
  for (int i = 0; i < 5; ++i) labels.push_back(label("E1-" + std::to_string(i), C::kYes));
  for (int i = 5; i < 8; ++i) labels.push_back(label("E1-" + std::to_string(i), C::kNo));
  for (int i = 8; i < 10; ++i) labels.push_back(label("E1-" + std::to_string(i), C::kDiscard));
  const auto examples = export_training_set(labels, corpus);
  CHECK(examples.size() == 8);
  CHECK(std::count_if(examples.begin(), examples.end(),
                      [](const auto& e) { return e.label == Label::kSexist; }) == 5);
  CHECK(std::is_sorted(examples.begin(), examples.end(),
                       [](const auto& a, const auto& b) { return a.id < b.id; }));

  std::vector<FinalLabel> depends;
  for (int i = 0; i < 4; ++i) depends.push_back(label("E2-" + std::to_string(i), C::kDependsOnContext));
  CHECK(export_training_set(depends, corpus).empty());

  const std::vector<FinalLabel> orphan{label("nope", C::kYes)};
  CHECK_THROWS_AS(export_training_set(orphan, corpus), Error);
}
