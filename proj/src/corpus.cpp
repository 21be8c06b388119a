#include "sexism_alert/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "sexism_alert/text.hpp"

namespace sexism_alert {

std::optional<MediaKind> media_kind_for_id(std::string_view id) {
  if (id.empty()) return std::nullopt;
  switch (id.front()) {
    case 'E':
    case 'M':
      return MediaKind::kNewspaper;
    case 'T':
      return MediaKind::kMicroblog;
    case 'Y':
      return MediaKind::kVideoPlatform;
    default:
      return std::nullopt;
  }
}

json to_json(const ContentSource& source) {
  return {{"id", source.id},
          {"url", source.url},
          {"media_kind", to_string(source.media_kind)},
          {"protagonist_gender", to_string(source.protagonist_gender)},
          {"protagonist_count", to_string(source.protagonist_count)},
          {"context", to_string(source.context)}};
}

namespace {

template <typename Enum>
Enum require_enum(const json& record, const char* field) {
  const std::string text = require_string(record, field);
  auto value = parse_enum<Enum>(text);
  if (!value) {
    fail(ErrorKind::kParse,
         "unknown " + std::string(field) + " value \"" + text + "\"");
  }
  return *value;
}

void check_id_prefix(const ContentSource& source) {
  if (source.id.empty()) {
    fail(ErrorKind::kInvalidArgument, "source id must not be empty");
  }
  auto implied = media_kind_for_id(source.id);
  if (implied && *implied != source.media_kind) {
    fail(ErrorKind::kInvalidArgument,
         "source " + source.id + " has media_kind " +
             std::string(to_string(source.media_kind)) + " but its id prefix implies " +
             std::string(to_string(*implied)));
  }
}

}  // namespace

ContentSource source_from_json(const json& record) {
  if (!record.is_object()) {
    fail(ErrorKind::kParse, "source record is not a JSON object");
  }
  ContentSource source;
  source.id = require_string(record, "id");
  source.url = require_string(record, "url");
  source.media_kind = require_enum<MediaKind>(record, "media_kind");
  source.protagonist_gender = require_enum<Gender>(record, "protagonist_gender");
  source.protagonist_count =
      require_enum<ProtagonistCount>(record, "protagonist_count");
  source.context = require_enum<SourceContext>(record, "context");
  check_id_prefix(source);
  return source;
}

std::vector<ContentSource> load_source_registry(const std::filesystem::path& path) {
  std::vector<ContentSource> sources;
  std::map<std::string, std::size_t> seen;
  read_jsonl(path, [&](const json& record, std::size_t line) {
    ContentSource source;
    try {
      source = source_from_json(record);
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
    auto [it, inserted] = seen.emplace(source.id, line);
    if (!inserted) {
      fail(ErrorKind::kAlreadyExists,
           path.string() + ":" + std::to_string(line) + ": duplicate source id \"" +
               source.id + "\" (first defined on line " +
               std::to_string(it->second) + ")");
    }
    sources.push_back(std::move(source));
  });
  return sources;
}

json to_json(const Comment& comment) {
  return {{"id", comment.id},
          {"source_id", comment.source_id},
          {"text", comment.text},
          {"fetched_at", format_rfc3339(comment.fetched_at)}};
}

IngestReport& IngestReport::operator+=(const IngestReport& other) {
  ingested += other.ingested;
  duplicate_ids.insert(duplicate_ids.end(), other.duplicate_ids.begin(),
                       other.duplicate_ids.end());
  rejected.insert(rejected.end(), other.rejected.begin(), other.rejected.end());
  return *this;
}

json to_json(const IngestReport& report) {
  json rejected = json::array();
  for (const auto& r : report.rejected) {
    rejected.push_back({{"index", r.index}, {"id", r.id}, {"reason", r.reason}});
  }
  return {{"ingested", report.ingested},
          {"duplicates", report.duplicate_ids.size()},
          {"duplicate_ids", report.duplicate_ids},
          {"rejected", rejected}};
}

void Corpus::add_source(ContentSource source) {
  check_id_prefix(source);
  if (source_index_.contains(source.id)) {
    fail(ErrorKind::kAlreadyExists, "duplicate source id \"" + source.id + "\"");
  }
  source_index_.emplace(source.id, sources_.size());
  sources_.push_back(std::move(source));
}

const ContentSource* Corpus::find_source(std::string_view id) const {
  auto it = source_index_.find(id);
  return it == source_index_.end() ? nullptr : &sources_[it->second];
}

const ContentSource& Corpus::source(std::string_view id) const {
  const ContentSource* found = find_source(id);
  if (found == nullptr) {
    fail(ErrorKind::kNotFound, "unknown source \"" + std::string(id) + "\"");
  }
  return *found;
}

IngestReport Corpus::ingest_comments(std::string_view source_id,
                                     std::span<const CommentRecord> records) {
  source(source_id);
  IngestReport report;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const CommentRecord& record = records[i];
    if (record.id.empty()) {
      report.rejected.push_back({i, record.id, "empty comment id"});
      continue;
    }
    std::string text;
    try {
      text = normalize_text(record.text);
    } catch (const Error& e) {
      report.rejected.push_back({i, record.id, e.what()});
      continue;
    }
    if (text.empty()) {
      report.rejected.push_back({i, record.id, "empty text"});
      continue;
    }
    if (comment_index_.contains(record.id)) {
      report.duplicate_ids.push_back(record.id);
      continue;
    }
    comment_index_.emplace(record.id, comments_.size());
    comments_.push_back(
        Comment{record.id, std::string(source_id), std::move(text), record.fetched_at});
    auto [it, _] = per_source_count_.try_emplace(std::string(source_id), 0);
    ++it->second;
    ++report.ingested;
  }
  return report;
}

const Comment* Corpus::find_comment(std::string_view id) const {
  auto it = comment_index_.find(id);
  return it == comment_index_.end() ? nullptr : &comments_[it->second];
}

std::size_t Corpus::comment_count(std::string_view source_id) const {
  source(source_id);
  auto it = per_source_count_.find(source_id);
  return it == per_source_count_.end() ? 0 : it->second;
}

std::vector<const Comment*> Corpus::comments_of(std::string_view source_id) const {
  source(source_id);
  std::vector<const Comment*> out;
  for (const auto& c : comments_) {
    if (c.source_id == source_id) out.push_back(&c);
  }
  return out;
}

std::pair<std::string, CommentRecord> comment_record_from_json(const json& record) {
  if (!record.is_object()) {
    fail(ErrorKind::kParse, "comment record is not a JSON object");
  }
  CommentRecord out;
  out.id = require_string(record, "id");
  out.text = require_string(record, "text");
  out.fetched_at = parse_rfc3339(require_string(record, "fetched_at"));
  std::string source_id;
  if (auto it = record.find("source_id"); it != record.end() && it->is_string()) {
    source_id = it->get<std::string>();
  }
  return {std::move(source_id), std::move(out)};
}

IngestReport ingest_comment_file(Corpus& corpus, const std::filesystem::path& path) {
  // Group by source while keeping the file order inside each group; the
  // rejection index reported is the 0-based record index within the file.
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<std::size_t, CommentRecord>>> grouped;
  std::size_t index = 0;
  read_jsonl(path, [&](const json& record, std::size_t line) {
    std::pair<std::string, CommentRecord> parsed;
    try {
      parsed = comment_record_from_json(record);
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
    if (parsed.first.empty()) {
      fail(ErrorKind::kParse, path.string() + ":" + std::to_string(line) +
                                  ": missing field \"source_id\"");
    }
    if (!grouped.contains(parsed.first)) order.push_back(parsed.first);
    grouped[parsed.first].emplace_back(index++, std::move(parsed.second));
  });

  IngestReport total;
  for (const auto& source_id : order) {
    const auto& items = grouped[source_id];
    std::vector<CommentRecord> records;
    records.reserve(items.size());
    for (const auto& [_, r] : items) records.push_back(r);
    IngestReport part = corpus.ingest_comments(source_id, records);
    for (auto& rejection : part.rejected) {
      rejection.index = items[rejection.index].first;
    }
    total += part;
  }
  std::sort(total.rejected.begin(), total.rejected.end(),
            [](const auto& a, const auto& b) { return a.index < b.index; });
  return total;
}

std::vector<CommentRecord> FixtureFetcher::fetch(const ContentSource& source) {
  std::vector<CommentRecord> records;
  read_jsonl(directory_ / (source.id + ".jsonl"), [&](const json& record, std::size_t) {
    auto [source_id, parsed] = comment_record_from_json(record);
    if (!source_id.empty() && source_id != source.id) {
      fail(ErrorKind::kInvalidArgument, "fixture record " + parsed.id +
                                            " belongs to source " + source_id);
    }
    records.push_back(std::move(parsed));
  });
  return records;
}

std::vector<CommentRecord> UnavailableFetcher::fetch(const ContentSource& source) {
  fail(ErrorKind::kUnavailable,
       "live fetching is not supported (source " + source.id + ", " + source.url + ")");
}

// ---------------------------------------------------------------- volume

std::string_view to_string(VolumeStatus status) {
  switch (status) {
    case VolumeStatus::kBelowMin: return "below_min";
    case VolumeStatus::kInRange: return "in_range";
    case VolumeStatus::kAboveMax: return "above_max";
  }
  return "unknown";
}

VolumeStatus classify_volume(std::size_t count, const VolumeBounds& bounds) {
  if (bounds.min_comments > bounds.max_comments) {
    fail(ErrorKind::kInvalidArgument, "volume bounds: min exceeds max");
  }
  if (count < bounds.min_comments) return VolumeStatus::kBelowMin;
  if (count > bounds.max_comments) return VolumeStatus::kAboveMax;
  return VolumeStatus::kInRange;
}

VolumeStatus check_source_volume(const Corpus& corpus, std::string_view source_id,
                                 const VolumeBounds& bounds) {
  return classify_volume(corpus.comment_count(source_id), bounds);
}

// ---------------------------------------------------------------- stats

namespace {

template <typename Enum>
FacetStats make_facet() {
  FacetStats f;
  f.facet = std::string(EnumNames<Enum>::facet);
  for (auto name : EnumNames<Enum>::names) f.categories.emplace_back(name);
  f.counts.assign(f.categories.size(), 0);
  f.proportions.assign(f.categories.size(), 0.0);
  return f;
}

void finish_facet(FacetStats& f, std::size_t total) {
  for (std::size_t i = 0; i < f.counts.size(); ++i) {
    f.proportions[i] =
        total == 0 ? 0.0 : static_cast<double>(f.counts[i]) / static_cast<double>(total);
  }
}

}  // namespace

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats stats;
  stats.media_kind = make_facet<MediaKind>();
  stats.gender = make_facet<Gender>();
  stats.protagonist_count = make_facet<ProtagonistCount>();
  stats.context = make_facet<SourceContext>();
  for (const auto& comment : corpus.comments()) {
    const ContentSource& s = corpus.source(comment.source_id);
    ++stats.media_kind.counts[static_cast<std::size_t>(s.media_kind)];
    ++stats.gender.counts[static_cast<std::size_t>(s.protagonist_gender)];
    ++stats.protagonist_count.counts[static_cast<std::size_t>(s.protagonist_count)];
    ++stats.context.counts[static_cast<std::size_t>(s.context)];
  }
  stats.total = corpus.comments().size();
  finish_facet(stats.media_kind, stats.total);
  finish_facet(stats.gender, stats.total);
  finish_facet(stats.protagonist_count, stats.total);
  finish_facet(stats.context, stats.total);
  return stats;
}

json to_json(const CorpusStats& stats) {
  json doc{{"total", stats.total}};
  for (const FacetStats* f : stats.facets()) {
    json facet = json::object();
    for (std::size_t i = 0; i < f->categories.size(); ++i) {
      facet[f->categories[i]] = {{"count", f->counts[i]},
                                 {"proportion", f->proportions[i]}};
    }
    doc[f->facet] = facet;
  }
  return doc;
}

std::string render_stats_table(const CorpusStats& stats) {
  std::ostringstream out;
  out << "Total comments: " << stats.total << "\n";
  out << std::left << std::setw(20) << "Facet" << std::setw(16) << "Category"
      << std::right << std::setw(10) << "Count" << std::setw(10) << "%" << "\n";
  for (const FacetStats* f : stats.facets()) {
    for (std::size_t i = 0; i < f->categories.size(); ++i) {
      out << std::left << std::setw(20) << (i == 0 ? f->facet : "") << std::setw(16)
          << f->categories[i] << std::right << std::setw(10) << f->counts[i]
          << std::setw(10) << std::fixed << std::setprecision(2)
          << f->proportions[i] * 100.0 << "\n";
    }
  }
  return out.str();
}

// ---------------------------------------------------------------- sampling

namespace {

constexpr double kSplitEpsilon = 1e-9;

template <std::size_t N>
void check_split(const std::array<double, N>& split, const char* name) {
  double sum = 0.0;
  for (double v : split) {
    if (!(v >= 0.0) || v > 1.0) {
      fail(ErrorKind::kInvalidArgument, std::string(name) + " entries must lie in [0,1]");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSplitEpsilon) {
    fail(ErrorKind::kInvalidArgument, std::string(name) + " must sum to 1");
  }
}

// Cells of the gender x count x context taxonomy.
constexpr std::size_t kGenders = 2;
constexpr std::size_t kCounts = 3;
constexpr std::size_t kContexts = 3;
constexpr std::size_t kCells = kGenders * kCounts * kContexts;

struct CellKey {
  std::size_t gender;
  std::size_t count;
  std::size_t context;
};

constexpr CellKey cell_key(std::size_t cell) {
  return {cell / (kCounts * kContexts), (cell / kContexts) % kCounts, cell % kContexts};
}

constexpr std::size_t cell_of(const ContentSource& s) {
  return static_cast<std::size_t>(s.protagonist_gender) * kCounts * kContexts +
         static_cast<std::size_t>(s.protagonist_count) * kContexts +
         static_cast<std::size_t>(s.context);
}

int cell_distance(std::size_t a, std::size_t b) {
  const CellKey x = cell_key(a);
  const CellKey y = cell_key(b);
  return (x.gender != y.gender) + (x.count != y.count) + (x.context != y.context);
}

using CellTable = std::array<double, kCells>;

// One IPF sweep over a single facet: rescale cells so the facet marginal
// matches its target wherever the current marginal is positive.
template <std::size_t K, typename Project>
double fit_marginal(CellTable& table, const std::array<double, K>& target,
                    Project project) {
  std::array<double, K> marginal{};
  for (std::size_t c = 0; c < kCells; ++c) marginal[project(c)] += table[c];
  double error = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    if (marginal[k] > 0.0) error = std::max(error, std::abs(marginal[k] - target[k]));
  }
  for (std::size_t c = 0; c < kCells; ++c) {
    const double m = marginal[project(c)];
    if (m > 0.0) table[c] *= target[project(c)] / m;
  }
  return error;
}

CellTable fit_cell_shares(const std::array<std::size_t, kCells>& available,
                          const SamplingTargets& targets) {
  CellTable table{};
  std::size_t occupied = 0;
  for (std::size_t c = 0; c < kCells; ++c) {
    if (available[c] > 0) {
      table[c] = 1.0;
      ++occupied;
    }
  }
  for (double& v : table) v /= static_cast<double>(occupied);

  auto gender = [](std::size_t c) { return cell_key(c).gender; };
  auto count = [](std::size_t c) { return cell_key(c).count; };
  auto context = [](std::size_t c) { return cell_key(c).context; };
  for (int sweep = 0; sweep < 500; ++sweep) {
    double err = fit_marginal(table, targets.gender_split, gender);
    err = std::max(err, fit_marginal(table, targets.count_split, count));
    err = std::max(err, fit_marginal(table, targets.context_split, context));
    if (err < 1e-12) break;
  }
  const double total = std::accumulate(table.begin(), table.end(), 0.0);
  for (double& v : table) v /= total;
  return table;
}

// Largest-remainder rounding of `shares * n`, ties broken by cell index.
std::array<std::size_t, kCells> round_quotas(const CellTable& shares, std::size_t n) {
  std::array<std::size_t, kCells> quotas{};
  std::array<double, kCells> remainder{};
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < kCells; ++c) {
    const double exact = shares[c] * static_cast<double>(n);
    quotas[c] = static_cast<std::size_t>(std::floor(exact));
    remainder[c] = exact - std::floor(exact);
    assigned += quotas[c];
  }
  std::array<std::size_t, kCells> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainder[a] > remainder[b];
  });
  for (std::size_t i = 0; assigned < n; i = (i + 1) % kCells) {
    if (shares[order[i]] > 0.0) {
      ++quotas[order[i]];
      ++assigned;
    }
  }
  return quotas;
}

template <typename Enum, std::size_t K>
void append_facet_report(SampleResult& result, const std::array<double, K>& target,
                         const std::array<std::size_t, K>& counts, std::size_t total,
                         double tolerance_pp) {
  for (std::size_t k = 0; k < K; ++k) {
    FacetDeviation d;
    d.facet = std::string(EnumNames<Enum>::facet);
    d.category = std::string(EnumNames<Enum>::names[k]);
    d.target = target[k];
    d.achieved = static_cast<double>(counts[k]) / static_cast<double>(total);
    d.deviation_pp = (d.achieved - d.target) * 100.0;
    d.within_tolerance = std::abs(d.deviation_pp) <= tolerance_pp + 1e-9;
    result.within_tolerance = result.within_tolerance && d.within_tolerance;
    result.facets.push_back(std::move(d));
  }
}

}  // namespace

void SamplingTargets::validate() const {
  if (!(sample_fraction > 0.0) || sample_fraction > 1.0) {
    fail(ErrorKind::kInvalidArgument, "sample_fraction must lie in (0, 1]");
  }
  if (!(tolerance_pp >= 0.0)) {
    fail(ErrorKind::kInvalidArgument, "tolerance must be non-negative");
  }
  check_split(gender_split, "gender_split");
  check_split(count_split, "count_split");
  check_split(context_split, "context_split");
}

std::vector<FacetDeviation> SampleResult::violations() const {
  std::vector<FacetDeviation> out;
  std::copy_if(facets.begin(), facets.end(), std::back_inserter(out),
               [](const FacetDeviation& d) { return !d.within_tolerance; });
  return out;
}

json to_json(const SampleResult& result) {
  json facets = json::array();
  for (const auto& d : result.facets) {
    facets.push_back({{"facet", d.facet},
                      {"category", d.category},
                      {"target", d.target},
                      {"achieved", d.achieved},
                      {"deviation_pp", d.deviation_pp},
                      {"within_tolerance", d.within_tolerance}});
  }
  json ids = json::array();
  for (const auto& c : result.comments) ids.push_back(c.id);
  return {{"size", result.comments.size()},
          {"within_tolerance", result.within_tolerance},
          {"facets", facets},
          {"comment_ids", ids}};
}

SampleResult select_balanced_sample(const Corpus& corpus,
                                    const SamplingTargets& targets,
                                    std::uint64_t seed) {
  targets.validate();
  const std::size_t total = corpus.comments().size();
  if (total == 0) {
    fail(ErrorKind::kInvalidArgument, "cannot sample from an empty corpus");
  }
  const auto n = static_cast<std::size_t>(
      std::llround(targets.sample_fraction * static_cast<double>(total)));
  if (n == 0) {
    fail(ErrorKind::kInvalidArgument, "sample_fraction yields an empty sample");
  }

  std::array<std::vector<const Comment*>, kCells> cells;
  for (const auto& comment : corpus.comments()) {
    cells[cell_of(corpus.source(comment.source_id))].push_back(&comment);
  }
  std::array<std::size_t, kCells> available{};
  for (std::size_t c = 0; c < kCells; ++c) available[c] = cells[c].size();

  auto quotas = round_quotas(fit_cell_shares(available, targets), n);

  // Cap at availability and hand the shortfall to the nearest cells that
  // still have spare comments.
  for (std::size_t c = 0; c < kCells; ++c) {
    while (quotas[c] > available[c]) {
      std::size_t best = kCells;
      for (std::size_t other = 0; other < kCells; ++other) {
        if (other == c || quotas[other] >= available[other]) continue;
        if (best == kCells || cell_distance(c, other) < cell_distance(c, best)) {
          best = other;
        }
      }
      if (best == kCells) break;
      const std::size_t move =
          std::min(quotas[c] - available[c], available[best] - quotas[best]);
      quotas[c] -= move;
      quotas[best] += move;
    }
  }

  SampleResult result;
  std::array<std::size_t, kGenders> gender_counts{};
  std::array<std::size_t, kCounts> count_counts{};
  std::array<std::size_t, kContexts> context_counts{};
  for (std::size_t c = 0; c < kCells; ++c) {
    auto members = cells[c];
    std::vector<std::pair<std::uint64_t, const Comment*>> ranked;
    ranked.reserve(members.size());
    for (const Comment* m : members) ranked.emplace_back(keyed_hash(m->id, seed), m);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first < b.first : a.second->id < b.second->id;
    });
    const std::size_t take = std::min(quotas[c], ranked.size());
    for (std::size_t i = 0; i < take; ++i) result.comments.push_back(*ranked[i].second);
    const CellKey key = cell_key(c);
    gender_counts[key.gender] += take;
    count_counts[key.count] += take;
    context_counts[key.context] += take;
  }
  std::sort(result.comments.begin(), result.comments.end(),
            [](const Comment& a, const Comment& b) { return a.id < b.id; });

  const std::size_t drawn = result.comments.size();
  append_facet_report<Gender>(result, targets.gender_split, gender_counts, drawn,
                              targets.tolerance_pp);
  append_facet_report<ProtagonistCount>(result, targets.count_split, count_counts,
                                        drawn, targets.tolerance_pp);
  append_facet_report<SourceContext>(result, targets.context_split, context_counts,
                                     drawn, targets.tolerance_pp);
  return result;
}

}  // namespace sexism_alert
