#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sexism_alert/common.hpp"
#include "sexism_alert/corpus.hpp"
#include "sexism_alert/labels.hpp"

namespace sexism_alert {

enum class LabelCategory { kYes, kNo, kDiscard, kDependsOnContext };

inline constexpr std::array<LabelCategory, 4> kAllCategories{
    LabelCategory::kYes, LabelCategory::kNo, LabelCategory::kDiscard,
    LabelCategory::kDependsOnContext};

std::string_view to_string(LabelCategory category);
std::optional<LabelCategory> parse_category(std::string_view text);

enum class Resolution { kStrictMajority, kTieRule };

std::string_view to_string(Resolution resolution);

/// Reasons annotators may cite when discarding a comment.
std::span<const std::string_view> suggested_discard_reasons();

struct AnnotationVote {
  std::string comment_id;
  std::string annotator_id;
  LabelCategory category = LabelCategory::kNo;
  Timestamp cast_at{};
  std::string reason;  // optional, mostly for Discard
};

json to_json(const AnnotationVote& vote);
AnnotationVote vote_from_json(const json& record);
std::vector<AnnotationVote> load_votes(const std::filesystem::path& path);

using VoteCounts = std::array<std::size_t, 4>;

struct FinalLabel {
  std::string comment_id;
  LabelCategory category = LabelCategory::kDependsOnContext;
  VoteCounts vote_counts{};
  Resolution resolved_by = Resolution::kTieRule;

  std::size_t votes() const;
  friend bool operator==(const FinalLabel&, const FinalLabel&) = default;
};

json to_json(const FinalLabel& label);
FinalLabel final_label_from_json(const json& record);

/// The category holding strictly more than half of the votes wins; with no
/// such category the comment resolves to DependsOnContext via the tie rule.
FinalLabel resolve_votes(std::string comment_id, std::span<const LabelCategory> votes);

struct VoteAck {
  std::string comment_id;
  std::string annotator_id;
  bool replaced = false;
  std::size_t votes_for_comment = 0;
  std::size_t audit_length = 0;
};

struct AuditEntry {
  AnnotationVote vote;
  std::optional<LabelCategory> replaced;
};

/// Votes and resolutions for a panel of registered annotators. One vote per
/// (comment, annotator); resubmissions replace the earlier vote and are kept
/// in the audit log. Resolving a comment freezes it until reopen().
/// Not internally synchronized.
class AnnotationBook {
 public:
  explicit AnnotationBook(std::size_t panel_size = 4);

  std::size_t panel_size() const { return panel_size_; }

  void register_annotator(std::string annotator_id);
  bool has_annotator(std::string_view annotator_id) const;
  void register_comment(std::string comment_id);
  bool has_comment(std::string_view comment_id) const;

  /// kNotFound for unknown comments, kUnauthenticated for unregistered
  /// annotators, kConflict when the comment is frozen.
  VoteAck record_vote(AnnotationVote vote);

  /// kConflict ("incomplete panel") with fewer than panel_size votes. A
  /// frozen comment returns its stored label.
  FinalLabel resolve_label(std::string_view comment_id);

  /// Restores a stored resolution without re-checking the panel (used when
  /// replaying persisted state).
  void restore_label(FinalLabel label);

  void reopen(std::string_view comment_id);

  bool is_frozen(std::string_view comment_id) const;
  bool has_voted(std::string_view comment_id, std::string_view annotator_id) const;
  std::size_t vote_count(std::string_view comment_id) const;
  std::vector<AnnotationVote> votes_for(std::string_view comment_id) const;
  const std::vector<AuditEntry>& audit_log(std::string_view comment_id) const;
  std::optional<FinalLabel> final_label(std::string_view comment_id) const;
  std::vector<FinalLabel> final_labels() const;

  /// First comment (by id) the annotator has not voted on and that is not
  /// frozen.
  std::optional<std::string> next_for(std::string_view annotator_id) const;

 private:
  struct CommentState {
    std::map<std::string, AnnotationVote, std::less<>> votes;
    std::vector<AuditEntry> audit;
    std::optional<FinalLabel> final;
  };

  const CommentState& state(std::string_view comment_id) const;
  CommentState& state(std::string_view comment_id);

  std::size_t panel_size_;
  std::set<std::string, std::less<>> annotators_;
  std::map<std::string, CommentState, std::less<>> comments_;
};

/// Builds a book from a vote file: every comment and annotator seen in the
/// file is registered, votes are replayed in order, and every comment with a
/// complete panel is resolved.
AnnotationBook book_from_votes(std::span<const AnnotationVote> votes,
                               std::size_t panel_size = 4);

struct CategoryDistribution {
  std::size_t total = 0;
  VoteCounts counts{};
  std::array<double, 4> fractions{};

  double fraction(LabelCategory c) const {
    return fractions[static_cast<std::size_t>(c)];
  }
  std::size_t count(LabelCategory c) const { return counts[static_cast<std::size_t>(c)]; }
};

/// Share of Yes among resolved comments of one taxonomy cell.
struct FacetSexistRate {
  std::string facet;
  std::string category;
  std::size_t resolved = 0;
  std::size_t sexist = 0;
  double rate = 0.0;
};

struct LabelingReport {
  CategoryDistribution overall;
  std::vector<FacetSexistRate> facets;

  const FacetSexistRate* find(std::string_view facet, std::string_view category) const;
};

/// Labels whose comment is missing from the corpus are counted in the
/// overall distribution but skipped in the facet breakdown.
LabelingReport labeling_report(std::span<const FinalLabel> labels, const Corpus& corpus);
json to_json(const LabelingReport& report);
std::string render_labeling_table(const LabelingReport& report);

/// Yes -> sexist, No -> not_sexist; Discard and DependsOnContext dropped.
/// Output is ordered by comment id.
std::vector<TrainingExample> export_training_set(std::span<const FinalLabel> labels,
                                                 const Corpus& corpus);

}  // namespace sexism_alert
