#pragma once

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "sexism_alert/alerting.hpp"
#include "sexism_alert/annotation.hpp"
#include "sexism_alert/classifier.hpp"
#include "sexism_alert/corpus.hpp"
#include "sexism_alert/evaluation.hpp"
#include "sexism_alert/store.hpp"

namespace sexism_alert {

struct ServiceConfig {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;
  std::filesystem::path data_dir = "data";
  /// Artifact directory to serve; empty means the data directory's active
  /// model, if any.
  std::filesystem::path model;
  AlertThresholds thresholds;
  /// Bearer token -> annotator id.
  std::map<std::string, std::string> annotator_tokens;
  std::size_t panel_size = 4;
  /// Annotators see only the comment text unless this is set.
  bool show_source_context = false;
  ClassifierConfig classifier;

  void validate() const;
};

/// Keys: listen ("host:port"), data_dir, model, thresholds {red_min,
/// yellow_min, min_comments}, annotators {token: id}, panel_size,
/// show_source_context, classifier {...}.
ServiceConfig service_config_from_json(const json& doc);
json to_json(const ServiceConfig& config);

enum class JobKind { kFineTune, kEvaluate, kBulkClassify };
enum class JobState { kQueued, kRunning, kDone, kFailed };

std::string_view to_string(JobKind kind);
std::string_view to_string(JobState state);

struct JobStatus {
  std::string id;
  JobKind kind = JobKind::kFineTune;
  JobState state = JobState::kQueued;
  json summary = json::object();

  bool terminal() const { return state == JobState::kDone || state == JobState::kFailed; }
};

json to_json(const JobStatus& job);

struct TrainRequest {
  std::optional<bool> baseline;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  double ratio = 0.8;
};

struct LabelState {
  std::string comment_id;
  std::size_t votes = 0;
  std::size_t panel_size = 0;
  std::optional<FinalLabel> final;
};

json to_json(const LabelState& state);

struct SourceSummary {
  ContentSource source;
  std::size_t n_comments = 0;
  VolumeStatus volume = VolumeStatus::kBelowMin;
};

/// Predicts every example and scores the predictions against the labels.
struct SplitEvaluation {
  Metrics metrics;
  NormalizedConfusion confusion;
  std::size_t failed = 0;  // examples the model could not score
};

SplitEvaluation evaluate_examples(const ModelArtifact& model,
                                  std::span<const TrainingExample> examples);
json to_json(const SplitEvaluation& evaluation);

/// Application core behind the HTTP API. Readers share a lock; writes
/// (ingestion, votes, model swaps) are exclusive and each entity file has a
/// single writer. State is rebuilt from the data directory at construction.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  const ServiceConfig& config() const { return config_; }
  DataDirectory& data() { return data_; }

  // Corpus
  void register_source(ContentSource source);
  IngestReport ingest(std::string_view source_id, std::span<const CommentRecord> records);
  std::vector<SourceSummary> sources() const;
  std::optional<Comment> comment(std::string_view id) const;

  // Classification and alerts
  bool has_model() const;
  void load_model(const std::filesystem::path& artifact_dir);
  void set_model(std::shared_ptr<const ModelArtifact> model);
  /// kUnavailable when no model is loaded.
  Prediction classify(std::string_view text) const;
  SourceAlert source_alert(std::string_view source_id,
                           const std::optional<AlertThresholds>& override = {}) const;
  std::vector<SourceAlert> alerts(const std::optional<AlertThresholds>& override = {}) const;

  // Annotation
  /// Maps a bearer token to its annotator id; kUnauthenticated otherwise.
  std::string authenticate(std::string_view token) const;
  /// Records the vote; when the panel becomes complete the comment is
  /// resolved and frozen.
  VoteAck submit_vote(std::string_view annotator_id, std::string_view comment_id,
                      LabelCategory category, std::string reason = {});
  std::optional<Comment> next_for(std::string_view annotator_id) const;
  std::size_t annotation_queue_size() const;
  std::size_t voted_count(std::string_view annotator_id) const;
  LabelState label_state(std::string_view comment_id) const;
  std::vector<FinalLabel> final_labels() const;

  // Jobs
  /// kConflict while another training job is active.
  JobStatus start_training(const TrainRequest& request);
  JobStatus job(std::string_view id) const;
  std::optional<json> latest_metrics() const;
  /// Blocks until the job is terminal (test and CLI helper).
  JobStatus wait_for(std::string_view id) const;

 private:
  std::vector<Prediction> predictions_for(std::string_view source_id) const;
  void replay();
  void record_job(const JobStatus& status);
  void run_training(std::string job_id, TrainRequest request);

  ServiceConfig config_;
  DataDirectory data_;

  mutable std::shared_mutex mutex_;
  Corpus corpus_;
  AnnotationBook book_;
  std::shared_ptr<const ModelArtifact> model_;
  std::uint64_t model_generation_ = 0;
  // When the data directory holds an annotation queue only those comments
  // are offered to annotators; otherwise every ingested comment is.
  bool queue_from_file_ = false;

  mutable std::mutex cache_mutex_;
  mutable std::map<std::string, Prediction, std::less<>> prediction_cache_;
  mutable std::uint64_t cache_generation_ = 0;

  mutable std::mutex jobs_mutex_;
  mutable std::condition_variable_any jobs_changed_;
  std::map<std::string, JobStatus, std::less<>> jobs_;
  std::size_t next_job_ = 1;
  bool training_active_ = false;
  std::vector<std::jthread> workers_;
};

}  // namespace sexism_alert
