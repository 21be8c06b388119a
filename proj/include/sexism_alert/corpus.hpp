#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sexism_alert/common.hpp"

namespace sexism_alert {

enum class MediaKind { kNewspaper, kMicroblog, kVideoPlatform };
enum class Gender { kMale, kFemale };
enum class ProtagonistCount { kIndividual, kCollective, kHybrid };
enum class SourceContext { kProfessional, kPersonal, kHybrid };

// Wire names and cardinality for the taxonomy enums.
template <typename Enum>
struct EnumNames;

template <>
struct EnumNames<MediaKind> {
  static constexpr std::string_view facet = "media_kind";
  static constexpr std::array<std::string_view, 3> names{
      "newspaper", "microblog", "video_platform"};
};
template <>
struct EnumNames<Gender> {
  static constexpr std::string_view facet = "protagonist_gender";
  static constexpr std::array<std::string_view, 2> names{"male", "female"};
};
template <>
struct EnumNames<ProtagonistCount> {
  static constexpr std::string_view facet = "protagonist_count";
  static constexpr std::array<std::string_view, 3> names{
      "individual", "collective", "hybrid"};
};
template <>
struct EnumNames<SourceContext> {
  static constexpr std::string_view facet = "context";
  static constexpr std::array<std::string_view, 3> names{
      "professional", "personal", "hybrid"};
};

template <typename Enum>
constexpr std::string_view to_string(Enum value) {
  return EnumNames<Enum>::names[static_cast<std::size_t>(value)];
}

template <typename Enum>
std::optional<Enum> parse_enum(std::string_view text) {
  const auto& names = EnumNames<Enum>::names;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == text) return static_cast<Enum>(i);
  }
  return std::nullopt;
}

struct ContentSource {
  std::string id;
  MediaKind media_kind = MediaKind::kNewspaper;
  std::string url;
  Gender protagonist_gender = Gender::kFemale;
  ProtagonistCount protagonist_count = ProtagonistCount::kIndividual;
  SourceContext context = SourceContext::kProfessional;
};

/// Media kind implied by the registry id prefix: E/M newspapers, T microblog,
/// Y video platform. Ids with any other prefix carry no implied kind.
std::optional<MediaKind> media_kind_for_id(std::string_view id);

json to_json(const ContentSource& source);
ContentSource source_from_json(const json& record);

/// Reads a JSON Lines registry. The whole file is rejected on the first
/// invalid record; the error message names the offending line.
std::vector<ContentSource> load_source_registry(const std::filesystem::path& path);

struct Comment {
  std::string id;
  std::string source_id;
  std::string text;
  Timestamp fetched_at{};
};

json to_json(const Comment& comment);

struct CommentRecord {
  std::string id;
  std::string text;
  Timestamp fetched_at{};
};

struct IngestRejection {
  std::size_t index = 0;
  std::string id;
  std::string reason;
};

struct IngestReport {
  std::size_t ingested = 0;
  std::vector<std::string> duplicate_ids;
  std::vector<IngestRejection> rejected;

  IngestReport& operator+=(const IngestReport& other);
};

json to_json(const IngestReport& report);

/// Sources and their comments. Not internally synchronized: callers that
/// share a Corpus across threads serialize writers themselves.
class Corpus {
 public:
  /// Throws kAlreadyExists on a duplicate id, kInvalidArgument when the id
  /// prefix contradicts the media kind.
  void add_source(ContentSource source);

  const ContentSource* find_source(std::string_view id) const;
  const ContentSource& source(std::string_view id) const;
  const std::vector<ContentSource>& sources() const { return sources_; }

  /// Stores the valid records of a stream. Text is NFC-normalized and
  /// trimmed; blank text is rejected with its record index; ids already
  /// present are skipped and listed as duplicates.
  IngestReport ingest_comments(std::string_view source_id,
                               std::span<const CommentRecord> records);

  const std::vector<Comment>& comments() const { return comments_; }
  const Comment* find_comment(std::string_view id) const;
  std::size_t comment_count(std::string_view source_id) const;
  std::vector<const Comment*> comments_of(std::string_view source_id) const;

  bool empty() const { return comments_.empty(); }

 private:
  std::vector<ContentSource> sources_;
  std::map<std::string, std::size_t, std::less<>> source_index_;
  std::vector<Comment> comments_;
  std::map<std::string, std::size_t, std::less<>> comment_index_;
  std::map<std::string, std::size_t, std::less<>> per_source_count_;
};

/// Reads {"id","source_id","text","fetched_at"} records and ingests them
/// source by source. Unknown source ids are an error.
IngestReport ingest_comment_file(Corpus& corpus, const std::filesystem::path& path);

/// Parses a comment JSON record without validating the text.
std::pair<std::string, CommentRecord> comment_record_from_json(const json& record);

class CommentFetcher {
 public:
  virtual ~CommentFetcher() = default;
  virtual std::vector<CommentRecord> fetch(const ContentSource& source) = 0;
};

/// Reads `<directory>/<source id>.jsonl` fixture files.
class FixtureFetcher final : public CommentFetcher {
 public:
  explicit FixtureFetcher(std::filesystem::path directory)
      : directory_(std::move(directory)) {}
  std::vector<CommentRecord> fetch(const ContentSource& source) override;

 private:
  std::filesystem::path directory_;
};

/// Stand-in for live scrapers: always raises kUnavailable.
class UnavailableFetcher final : public CommentFetcher {
 public:
  std::vector<CommentRecord> fetch(const ContentSource& source) override;
};

// ---------------------------------------------------------------- volume

enum class VolumeStatus { kBelowMin, kInRange, kAboveMax };

std::string_view to_string(VolumeStatus status);

/// Inclusive in-range bounds on the number of comments per source.
struct VolumeBounds {
  std::size_t min_comments = 15;
  std::size_t max_comments = 5000;
};

VolumeStatus classify_volume(std::size_t count, const VolumeBounds& bounds = {});
VolumeStatus check_source_volume(const Corpus& corpus, std::string_view source_id,
                                 const VolumeBounds& bounds = {});

// ---------------------------------------------------------------- stats

struct FacetStats {
  std::string facet;
  std::vector<std::string> categories;
  std::vector<std::size_t> counts;
  std::vector<double> proportions;
};

struct CorpusStats {
  std::size_t total = 0;
  FacetStats media_kind;
  FacetStats gender;
  FacetStats protagonist_count;
  FacetStats context;

  std::array<const FacetStats*, 4> facets() const {
    return {&media_kind, &gender, &protagonist_count, &context};
  }
};

CorpusStats corpus_stats(const Corpus& corpus);
json to_json(const CorpusStats& stats);
std::string render_stats_table(const CorpusStats& stats);

// ---------------------------------------------------------------- sampling

struct SamplingTargets {
  double sample_fraction = 0.05;
  std::array<double, 2> gender_split{0.5, 0.5};
  std::array<double, 3> count_split{1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::array<double, 3> context_split{1.0 / 3, 1.0 / 3, 1.0 / 3};
  /// Allowed deviation per category, in percentage points.
  double tolerance_pp = 5.0;

  void validate() const;
};

struct FacetDeviation {
  std::string facet;
  std::string category;
  double target = 0.0;
  double achieved = 0.0;
  double deviation_pp = 0.0;
  bool within_tolerance = true;
};

struct SampleResult {
  std::vector<Comment> comments;
  std::vector<FacetDeviation> facets;
  bool within_tolerance = true;

  std::vector<FacetDeviation> violations() const;
};

json to_json(const SampleResult& result);

/// Stratified draw over the 2x3x3 protagonist taxonomy. Cell quotas come from
/// iterative proportional fitting toward the targets; quotas a cell cannot
/// fill spill over to the nearest cells with spare comments. Within a cell,
/// comments are ranked by a seeded hash of their id, so the result depends
/// only on the corpus content and the seed.
SampleResult select_balanced_sample(const Corpus& corpus,
                                    const SamplingTargets& targets,
                                    std::uint64_t seed);

}  // namespace sexism_alert
