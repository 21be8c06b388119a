#include "sexism_alert/annotation.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace sexism_alert {

namespace {

constexpr std::array<std::string_view, 4> kCategoryNames{"Yes", "No", "Discard",
                                                         "DependsOnContext"};

constexpr std::array<std::string_view, 8> kDiscardReasons{
    "many spelling or grammatical errors",
    "mostly non-alphanumeric characters",
    "unclear intention or possible sarcasm",
    "unintelligible",
    "duplicate comment",
    "not in Spanish",
    "incomplete comment",
    "depends on other media such as images",
};

}  // namespace

std::string_view to_string(LabelCategory category) {
  return kCategoryNames[static_cast<std::size_t>(category)];
}

std::optional<LabelCategory> parse_category(std::string_view text) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == text) return static_cast<LabelCategory>(i);
  }
  return std::nullopt;
}

std::string_view to_string(Resolution resolution) {
  return resolution == Resolution::kStrictMajority ? "strict_majority" : "tie_rule";
}

std::span<const std::string_view> suggested_discard_reasons() { return kDiscardReasons; }

json to_json(const AnnotationVote& vote) {
  json out{{"comment_id", vote.comment_id},
           {"annotator_id", vote.annotator_id},
           {"category", to_string(vote.category)},
           {"cast_at", format_rfc3339(vote.cast_at)}};
  if (!vote.reason.empty()) out["reason"] = vote.reason;
  return out;
}

AnnotationVote vote_from_json(const json& record) {
  if (!record.is_object()) {
    fail(ErrorKind::kParse, "vote record is not a JSON object");
  }
  AnnotationVote vote;
  vote.comment_id = require_string(record, "comment_id");
  vote.annotator_id = require_string(record, "annotator_id");
  const std::string category = require_string(record, "category");
  auto parsed = parse_category(category);
  if (!parsed) {
    fail(ErrorKind::kParse, "unknown category \"" + category + "\"");
  }
  vote.category = *parsed;
  vote.cast_at = parse_rfc3339(require_string(record, "cast_at"));
  if (auto it = record.find("reason"); it != record.end() && it->is_string()) {
    vote.reason = it->get<std::string>();
  }
  return vote;
}

std::vector<AnnotationVote> load_votes(const std::filesystem::path& path) {
  std::vector<AnnotationVote> votes;
  read_jsonl(path, [&](const json& record, std::size_t line) {
    try {
      votes.push_back(vote_from_json(record));
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return votes;
}

std::size_t FinalLabel::votes() const {
  std::size_t n = 0;
  for (auto c : vote_counts) n += c;
  return n;
}

json to_json(const FinalLabel& label) {
  json counts = json::object();
  for (auto c : kAllCategories) {
    counts[std::string(to_string(c))] = label.vote_counts[static_cast<std::size_t>(c)];
  }
  return {{"comment_id", label.comment_id},
          {"category", to_string(label.category)},
          {"vote_counts", counts},
          {"resolved_by", to_string(label.resolved_by)}};
}

FinalLabel final_label_from_json(const json& record) {
  FinalLabel label;
  label.comment_id = require_string(record, "comment_id");
  const std::string category = require_string(record, "category");
  auto parsed = parse_category(category);
  if (!parsed) fail(ErrorKind::kParse, "unknown category \"" + category + "\"");
  label.category = *parsed;
  const json& counts = record.at("vote_counts");
  for (auto c : kAllCategories) {
    label.vote_counts[static_cast<std::size_t>(c)] =
        counts.value(std::string(to_string(c)), std::size_t{0});
  }
  label.resolved_by = require_string(record, "resolved_by") == "strict_majority"
                          ? Resolution::kStrictMajority
                          : Resolution::kTieRule;
  return label;
}

FinalLabel resolve_votes(std::string comment_id, std::span<const LabelCategory> votes) {
  FinalLabel label;
  label.comment_id = std::move(comment_id);
  for (auto v : votes) ++label.vote_counts[static_cast<std::size_t>(v)];
  for (auto c : kAllCategories) {
    if (2 * label.vote_counts[static_cast<std::size_t>(c)] > votes.size()) {
      label.category = c;
      label.resolved_by = Resolution::kStrictMajority;
      return label;
    }
  }
  label.category = LabelCategory::kDependsOnContext;
  label.resolved_by = Resolution::kTieRule;
  return label;
}

AnnotationBook::AnnotationBook(std::size_t panel_size) : panel_size_(panel_size) {
  if (panel_size_ == 0) {
    fail(ErrorKind::kInvalidArgument, "panel size must be at least 1");
  }
}

void AnnotationBook::register_annotator(std::string annotator_id) {
  if (annotator_id.empty()) {
    fail(ErrorKind::kInvalidArgument, "annotator id must not be empty");
  }
  annotators_.insert(std::move(annotator_id));
}

bool AnnotationBook::has_annotator(std::string_view annotator_id) const {
  return annotators_.contains(annotator_id);
}

void AnnotationBook::register_comment(std::string comment_id) {
  comments_.try_emplace(std::move(comment_id));
}

bool AnnotationBook::has_comment(std::string_view comment_id) const {
  return comments_.contains(comment_id);
}

const AnnotationBook::CommentState& AnnotationBook::state(std::string_view comment_id) const {
  auto it = comments_.find(comment_id);
  if (it == comments_.end()) {
    fail(ErrorKind::kNotFound, "unknown comment \"" + std::string(comment_id) + "\"");
  }
  return it->second;
}

AnnotationBook::CommentState& AnnotationBook::state(std::string_view comment_id) {
  return const_cast<CommentState&>(std::as_const(*this).state(comment_id));
}

VoteAck AnnotationBook::record_vote(AnnotationVote vote) {
  CommentState& s = state(vote.comment_id);
  if (!has_annotator(vote.annotator_id)) {
    fail(ErrorKind::kUnauthenticated,
         "unknown annotator \"" + vote.annotator_id + "\"");
  }
  if (s.final) {
    fail(ErrorKind::kConflict,
         "comment \"" + vote.comment_id + "\" is resolved and frozen");
  }
  VoteAck ack{vote.comment_id, vote.annotator_id, false, 0, 0};
  AuditEntry entry{vote, std::nullopt};
  if (auto it = s.votes.find(vote.annotator_id); it != s.votes.end()) {
    entry.replaced = it->second.category;
    ack.replaced = true;
    it->second = std::move(vote);
  } else {
    std::string key = vote.annotator_id;
    s.votes.emplace(std::move(key), std::move(vote));
  }
  s.audit.push_back(std::move(entry));
  ack.votes_for_comment = s.votes.size();
  ack.audit_length = s.audit.size();
  return ack;
}

FinalLabel AnnotationBook::resolve_label(std::string_view comment_id) {
  CommentState& s = state(comment_id);
  if (s.final) return *s.final;
  if (s.votes.size() < panel_size_) {
    fail(ErrorKind::kConflict, "incomplete panel for comment \"" +
                                   std::string(comment_id) + "\": " +
                                   std::to_string(s.votes.size()) + " of " +
                                   std::to_string(panel_size_) + " votes");
  }
  std::vector<LabelCategory> categories;
  categories.reserve(s.votes.size());
  for (const auto& [_, v] : s.votes) categories.push_back(v.category);
  s.final = resolve_votes(std::string(comment_id), categories);
  return *s.final;
}

void AnnotationBook::restore_label(FinalLabel label) {
  CommentState& s = state(label.comment_id);
  s.final = std::move(label);
}

void AnnotationBook::reopen(std::string_view comment_id) { state(comment_id).final.reset(); }

bool AnnotationBook::is_frozen(std::string_view comment_id) const {
  return state(comment_id).final.has_value();
}

bool AnnotationBook::has_voted(std::string_view comment_id,
                               std::string_view annotator_id) const {
  return state(comment_id).votes.contains(annotator_id);
}

std::size_t AnnotationBook::vote_count(std::string_view comment_id) const {
  return state(comment_id).votes.size();
}

std::vector<AnnotationVote> AnnotationBook::votes_for(std::string_view comment_id) const {
  std::vector<AnnotationVote> out;
  for (const auto& [_, v] : state(comment_id).votes) out.push_back(v);
  return out;
}

const std::vector<AuditEntry>& AnnotationBook::audit_log(std::string_view comment_id) const {
  return state(comment_id).audit;
}

std::optional<FinalLabel> AnnotationBook::final_label(std::string_view comment_id) const {
  return state(comment_id).final;
}

std::vector<FinalLabel> AnnotationBook::final_labels() const {
  std::vector<FinalLabel> out;
  for (const auto& [_, s] : comments_) {
    if (s.final) out.push_back(*s.final);
  }
  return out;
}

std::optional<std::string> AnnotationBook::next_for(std::string_view annotator_id) const {
  for (const auto& [id, s] : comments_) {
    if (!s.final && !s.votes.contains(annotator_id)) return id;
  }
  return std::nullopt;
}

AnnotationBook book_from_votes(std::span<const AnnotationVote> votes,
                               std::size_t panel_size) {
  AnnotationBook book(panel_size);
  for (const auto& v : votes) {
    book.register_comment(v.comment_id);
    book.register_annotator(v.annotator_id);
  }
  std::set<std::string> seen;
  for (const auto& v : votes) {
    book.record_vote(v);
    seen.insert(v.comment_id);
  }
  for (const auto& id : seen) {
    if (book.vote_count(id) >= panel_size) book.resolve_label(id);
  }
  return book;
}

// ---------------------------------------------------------------- reports

const FacetSexistRate* LabelingReport::find(std::string_view facet,
                                            std::string_view category) const {
  for (const auto& f : facets) {
    if (f.facet == facet && f.category == category) return &f;
  }
  return nullptr;
}

namespace {

template <typename Enum>
void add_facet_rows(std::vector<FacetSexistRate>& rows) {
  for (auto name : EnumNames<Enum>::names) {
    rows.push_back({std::string(EnumNames<Enum>::facet), std::string(name), 0, 0, 0.0});
  }
}

}  // namespace

LabelingReport labeling_report(std::span<const FinalLabel> labels, const Corpus& corpus) {
  LabelingReport report;
  add_facet_rows<MediaKind>(report.facets);
  add_facet_rows<Gender>(report.facets);
  add_facet_rows<ProtagonistCount>(report.facets);
  add_facet_rows<SourceContext>(report.facets);
  // Row offsets of each facet inside report.facets.
  constexpr std::size_t kMedia = 0, kGender = 3, kCount = 5, kContext = 8;

  for (const auto& label : labels) {
    ++report.overall.counts[static_cast<std::size_t>(label.category)];
    ++report.overall.total;
    const Comment* comment = corpus.find_comment(label.comment_id);
    if (comment == nullptr) continue;
    const ContentSource& s = corpus.source(comment->source_id);
    const bool sexist = label.category == LabelCategory::kYes;
    for (std::size_t row : {kMedia + static_cast<std::size_t>(s.media_kind),
                            kGender + static_cast<std::size_t>(s.protagonist_gender),
                            kCount + static_cast<std::size_t>(s.protagonist_count),
                            kContext + static_cast<std::size_t>(s.context)}) {
      ++report.facets[row].resolved;
      if (sexist) ++report.facets[row].sexist;
    }
  }
  for (std::size_t i = 0; i < 4; ++i) {
    report.overall.fractions[i] =
        report.overall.total == 0
            ? 0.0
            : static_cast<double>(report.overall.counts[i]) /
                  static_cast<double>(report.overall.total);
  }
  for (auto& f : report.facets) {
    f.rate = f.resolved == 0
                 ? 0.0
                 : static_cast<double>(f.sexist) / static_cast<double>(f.resolved);
  }
  return report;
}

json to_json(const LabelingReport& report) {
  json overall{{"total", report.overall.total}};
  json categories = json::object();
  for (auto c : kAllCategories) {
    categories[std::string(to_string(c))] = {{"count", report.overall.count(c)},
                                             {"fraction", report.overall.fraction(c)}};
  }
  overall["categories"] = categories;
  json facets = json::array();
  for (const auto& f : report.facets) {
    facets.push_back({{"facet", f.facet},
                      {"category", f.category},
                      {"resolved", f.resolved},
                      {"sexist", f.sexist},
                      {"sexist_rate", f.rate}});
  }
  return {{"overall", overall}, {"facets", facets}};
}

std::string render_labeling_table(const LabelingReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "Resolved comments: " << report.overall.total << "\n";
  for (auto c : kAllCategories) {
    out << "  " << std::left << std::setw(18) << to_string(c) << std::right
        << std::setw(8) << report.overall.count(c) << std::setw(9)
        << report.overall.fraction(c) * 100.0 << " %\n";
  }
  out << "Sexist rate by facet:\n";
  for (const auto& f : report.facets) {
    out << "  " << std::left << std::setw(20) << f.facet << std::setw(16) << f.category
        << std::right << std::setw(8) << f.resolved << std::setw(9) << f.rate * 100.0
        << " %\n";
  }
  return out.str();
}

std::vector<TrainingExample> export_training_set(std::span<const FinalLabel> labels,
                                                 const Corpus& corpus) {
  std::vector<TrainingExample> out;
  for (const auto& label : labels) {
    if (label.category != LabelCategory::kYes && label.category != LabelCategory::kNo) {
      continue;
    }
    const Comment* comment = corpus.find_comment(label.comment_id);
    if (comment == nullptr) {
      fail(ErrorKind::kNotFound,
           "labelled comment \"" + label.comment_id + "\" is not in the corpus");
    }
    out.push_back({comment->id, comment->text,
                   label.category == LabelCategory::kYes ? Label::kSexist
                                                         : Label::kNotSexist});
  }
  std::sort(out.begin(), out.end(),
            [](const TrainingExample& a, const TrainingExample& b) { return a.id < b.id; });
  return out;
}

}  // namespace sexism_alert
