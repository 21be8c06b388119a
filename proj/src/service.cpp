#include "sexism_alert/service.hpp"

#include <algorithm>

namespace sexism_alert {

namespace fs = std::filesystem;

void ServiceConfig::validate() const {
  thresholds.validate();
  classifier.validate();
  if (panel_size == 0) fail(ErrorKind::kInvalidArgument, "panel_size must be at least 1");
  if (listen_port < 0 || listen_port > 65535) {
    fail(ErrorKind::kInvalidArgument, "listen port out of range");
  }
}

ServiceConfig service_config_from_json(const json& doc) {
  ServiceConfig c;
  try {
    if (doc.contains("listen")) {
      const auto listen = doc.at("listen").get<std::string>();
      const auto colon = listen.rfind(':');
      if (colon == std::string::npos) {
        fail(ErrorKind::kParse, "listen must be host:port");
      }
      c.listen_host = listen.substr(0, colon);
      c.listen_port = std::stoi(listen.substr(colon + 1));
    }
    if (doc.contains("data_dir")) c.data_dir = doc.at("data_dir").get<std::string>();
    if (doc.contains("model")) c.model = doc.at("model").get<std::string>();
    if (doc.contains("thresholds")) {
      const json& t = doc.at("thresholds");
      c.thresholds.red_min = t.value("red_min", c.thresholds.red_min);
      c.thresholds.yellow_min = t.value("yellow_min", c.thresholds.yellow_min);
      c.thresholds.min_comments = t.value("min_comments", c.thresholds.min_comments);
    }
    if (doc.contains("annotators")) {
      c.annotator_tokens = doc.at("annotators").get<std::map<std::string, std::string>>();
    }
    c.panel_size = doc.value("panel_size", c.panel_size);
    c.show_source_context = doc.value("show_source_context", c.show_source_context);
    if (doc.contains("classifier")) c.classifier = config_from_json(doc.at("classifier"));
  } catch (const json::exception& e) {
    fail(ErrorKind::kParse, std::string("invalid service config: ") + e.what());
  } catch (const std::logic_error& e) {
    fail(ErrorKind::kParse, std::string("invalid service config: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const ServiceConfig& c) {
  return {{"listen", c.listen_host + ":" + std::to_string(c.listen_port)},
          {"data_dir", c.data_dir.string()},
          {"model", c.model.string()},
          {"thresholds", to_json(c.thresholds)},
          {"annotators", c.annotator_tokens},
          {"panel_size", c.panel_size},
          {"show_source_context", c.show_source_context},
          {"classifier", to_json(c.classifier)}};
}

std::string_view to_string(JobKind kind) {
  switch (kind) {
    case JobKind::kFineTune: return "fine_tune";
    case JobKind::kEvaluate: return "evaluate";
    case JobKind::kBulkClassify: return "bulk_classify";
  }
  return "unknown";
}

std::string_view to_string(JobState state) {
  switch (state) {
    case JobState::kQueued: return "queued";
    case JobState::kRunning: return "running";
    case JobState::kDone: return "done";
    case JobState::kFailed: return "failed";
  }
  return "unknown";
}

json to_json(const JobStatus& job) {
  return {{"id", job.id},
          {"kind", to_string(job.kind)},
          {"state", to_string(job.state)},
          {"summary", job.summary}};
}

namespace {

JobStatus job_from_json(const json& record) {
  JobStatus job;
  job.id = require_string(record, "id");
  const std::string state = require_string(record, "state");
  for (auto s : {JobState::kQueued, JobState::kRunning, JobState::kDone, JobState::kFailed}) {
    if (to_string(s) == state) job.state = s;
  }
  const std::string kind = require_string(record, "kind");
  for (auto k : {JobKind::kFineTune, JobKind::kEvaluate, JobKind::kBulkClassify}) {
    if (to_string(k) == kind) job.kind = k;
  }
  job.summary = record.value("summary", json::object());
  return job;
}

}  // namespace

json to_json(const LabelState& state) {
  json out{{"comment_id", state.comment_id},
           {"votes", state.votes},
           {"panel_size", state.panel_size},
           {"state", state.final ? "resolved" : "pending"}};
  if (state.final) out["final_label"] = to_json(*state.final);
  return out;
}

SplitEvaluation evaluate_examples(const ModelArtifact& model,
                                  std::span<const TrainingExample> examples) {
  std::vector<std::string> texts;
  texts.reserve(examples.size());
  for (const auto& ex : examples) texts.push_back(ex.text);
  const auto items = predict_batch(model, texts);
  std::vector<Label> predicted, gold;
  SplitEvaluation out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!items[i].ok()) {
      ++out.failed;
      continue;
    }
    predicted.push_back(items[i].prediction->label);
    gold.push_back(examples[i].label);
  }
  out.metrics = compute_metrics(count_confusion(predicted, gold));
  out.confusion = normalized_confusion_matrix(predicted, gold);
  return out;
}

json to_json(const SplitEvaluation& evaluation) {
  return {{"metrics", to_json(evaluation.metrics)},
          {"confusion", to_json(evaluation.confusion)},
          {"failed", evaluation.failed}};
}

// ---------------------------------------------------------------- Service

Service::Service(ServiceConfig config)
    : config_(std::move(config)), data_(config_.data_dir), book_(config_.panel_size) {
  config_.validate();
  for (const auto& [_, annotator] : config_.annotator_tokens) {
    book_.register_annotator(annotator);
  }
  replay();
  fs::path model_dir = config_.model;
  if (model_dir.empty() && fs::exists(data_.active_model_path())) {
    model_dir = read_json_file(data_.active_model_path()).at("path").get<std::string>();
  }
  if (!model_dir.empty()) load_model(model_dir);
}

Service::~Service() {
  // jthreads join on destruction; clear them before the state they use.
  workers_.clear();
}

void Service::replay() {
  for (const auto& record : data_.sources().replay()) {
    corpus_.add_source(source_from_json(record));
  }
  for (const auto& record : data_.comments().replay()) {
    auto [source_id, parsed] = comment_record_from_json(record);
    const CommentRecord one[] = {std::move(parsed)};
    corpus_.ingest_comments(source_id, one);
  }
  if (fs::exists(data_.queue_path())) {
    queue_from_file_ = true;
    for (const auto& record : read_jsonl(data_.queue_path())) {
      const std::string id = require_string(record, "comment_id");
      if (corpus_.find_comment(id) == nullptr) {
        fail(ErrorKind::kNotFound, "annotation queue names unknown comment \"" + id + "\"");
      }
      book_.register_comment(id);
    }
  } else {
    for (const auto& c : corpus_.comments()) book_.register_comment(c.id);
  }
  for (const auto& record : data_.votes().replay()) {
    AnnotationVote vote = vote_from_json(record);
    book_.register_annotator(vote.annotator_id);
    book_.register_comment(vote.comment_id);
    book_.record_vote(std::move(vote));
  }
  for (const auto& record : data_.labels().replay()) {
    book_.restore_label(final_label_from_json(record));
  }
  for (const auto& record : data_.jobs().replay()) {
    JobStatus job = job_from_json(record);
    jobs_[job.id] = std::move(job);
  }
  for (auto& [id, job] : jobs_) {
    if (!job.terminal()) {
      job.state = JobState::kFailed;
      job.summary = {{"error", "interrupted by a service restart"}};
      data_.jobs().append(to_json(job));
    }
  }
  next_job_ = jobs_.size() + 1;
}

void Service::register_source(ContentSource source) {
  std::unique_lock lock(mutex_);
  corpus_.add_source(source);
  data_.sources().append(to_json(source));
}

IngestReport Service::ingest(std::string_view source_id,
                             std::span<const CommentRecord> records) {
  std::unique_lock lock(mutex_);
  const std::size_t before = corpus_.comments().size();
  IngestReport report = corpus_.ingest_comments(source_id, records);
  for (std::size_t i = before; i < corpus_.comments().size(); ++i) {
    const Comment& c = corpus_.comments()[i];
    data_.comments().append(to_json(c));
    if (!queue_from_file_) book_.register_comment(c.id);
  }
  return report;
}

std::vector<SourceSummary> Service::sources() const {
  std::shared_lock lock(mutex_);
  std::vector<SourceSummary> out;
  for (const auto& s : corpus_.sources()) {
    const std::size_t n = corpus_.comment_count(s.id);
    out.push_back({s, n, classify_volume(n)});
  }
  return out;
}

std::optional<Comment> Service::comment(std::string_view id) const {
  std::shared_lock lock(mutex_);
  const Comment* c = corpus_.find_comment(id);
  return c == nullptr ? std::nullopt : std::optional<Comment>(*c);
}

bool Service::has_model() const {
  std::shared_lock lock(mutex_);
  return model_ != nullptr;
}

void Service::load_model(const fs::path& artifact_dir) {
  set_model(std::make_shared<const ModelArtifact>(ModelArtifact::load(artifact_dir)));
}

void Service::set_model(std::shared_ptr<const ModelArtifact> model) {
  std::unique_lock lock(mutex_);
  model_ = std::move(model);
  ++model_generation_;
}

Prediction Service::classify(std::string_view text) const {
  std::shared_ptr<const ModelArtifact> model;
  {
    std::shared_lock lock(mutex_);
    model = model_;
  }
  if (!model) fail(ErrorKind::kUnavailable, "no model loaded");
  return predict(*model, text);
}

std::vector<Prediction> Service::predictions_for(std::string_view source_id) const {
  std::shared_ptr<const ModelArtifact> model;
  std::uint64_t generation = 0;
  std::vector<Comment> comments;
  {
    std::shared_lock lock(mutex_);
    for (const Comment* c : corpus_.comments_of(source_id)) comments.push_back(*c);
    model = model_;
    generation = model_generation_;
  }
  if (!model) fail(ErrorKind::kUnavailable, "no model loaded");

  std::vector<Prediction> out(comments.size());
  std::vector<std::size_t> missing;
  {
    std::lock_guard lock(cache_mutex_);
    if (cache_generation_ != generation) {
      prediction_cache_.clear();
      cache_generation_ = generation;
    }
    for (std::size_t i = 0; i < comments.size(); ++i) {
      auto it = prediction_cache_.find(comments[i].id);
      if (it != prediction_cache_.end()) {
        out[i] = it->second;
      } else {
        missing.push_back(i);
      }
    }
  }
  if (!missing.empty()) {
    std::vector<std::string> texts;
    for (std::size_t i : missing) texts.push_back(comments[i].text);
    const auto items = predict_batch(*model, texts);
    std::lock_guard lock(cache_mutex_);
    for (std::size_t k = 0; k < missing.size(); ++k) {
      if (!items[k].ok()) fail(ErrorKind::kUnavailable, items[k].error);
      Prediction p = *items[k].prediction;
      p.key = comments[missing[k]].id;
      out[missing[k]] = p;
      if (cache_generation_ == generation) prediction_cache_[p.key] = p;
    }
  }
  return out;
}

SourceAlert Service::source_alert(std::string_view source_id,
                                  const std::optional<AlertThresholds>& override) const {
  const AlertThresholds thresholds = override.value_or(config_.thresholds);
  thresholds.validate();
  {
    std::shared_lock lock(mutex_);
    corpus_.source(source_id);
  }
  std::vector<SourcePrediction> predictions;
  for (const auto& p : predictions_for(source_id)) {
    predictions.push_back({std::string(source_id), p.key, p.label, p.score});
  }
  return aggregate_source(source_id, predictions, thresholds);
}

std::vector<SourceAlert> Service::alerts(const std::optional<AlertThresholds>& override) const {
  std::vector<std::string> ids;
  {
    std::shared_lock lock(mutex_);
    for (const auto& s : corpus_.sources()) ids.push_back(s.id);
  }
  std::sort(ids.begin(), ids.end());
  std::vector<SourceAlert> out;
  for (const auto& id : ids) out.push_back(source_alert(id, override));
  return out;
}

std::string Service::authenticate(std::string_view token) const {
  auto it = config_.annotator_tokens.find(std::string(token));
  if (token.empty() || it == config_.annotator_tokens.end()) {
    fail(ErrorKind::kUnauthenticated, "invalid annotator token");
  }
  return it->second;
}

VoteAck Service::submit_vote(std::string_view annotator_id, std::string_view comment_id,
                             LabelCategory category, std::string reason) {
  std::unique_lock lock(mutex_);
  AnnotationVote vote{std::string(comment_id), std::string(annotator_id), category,
                      now_utc(), std::move(reason)};
  const json record = to_json(vote);
  VoteAck ack = book_.record_vote(std::move(vote));
  data_.votes().append(record);
  if (ack.votes_for_comment >= book_.panel_size()) {
    data_.labels().append(to_json(book_.resolve_label(comment_id)));
  }
  return ack;
}

std::optional<Comment> Service::next_for(std::string_view annotator_id) const {
  std::shared_lock lock(mutex_);
  auto id = book_.next_for(annotator_id);
  if (!id) return std::nullopt;
  const Comment* c = corpus_.find_comment(*id);
  return c == nullptr ? std::nullopt : std::optional<Comment>(*c);
}

std::size_t Service::annotation_queue_size() const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& c : corpus_.comments()) n += book_.has_comment(c.id) ? 1 : 0;
  return n;
}

std::size_t Service::voted_count(std::string_view annotator_id) const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& c : corpus_.comments()) {
    if (book_.has_comment(c.id) && book_.has_voted(c.id, annotator_id)) ++n;
  }
  return n;
}

LabelState Service::label_state(std::string_view comment_id) const {
  std::shared_lock lock(mutex_);
  if (corpus_.find_comment(comment_id) == nullptr) {
    fail(ErrorKind::kNotFound, "unknown comment \"" + std::string(comment_id) + "\"");
  }
  LabelState state;
  state.comment_id = std::string(comment_id);
  state.panel_size = book_.panel_size();
  if (book_.has_comment(comment_id)) {
    state.votes = book_.vote_count(comment_id);
    state.final = book_.final_label(comment_id);
  }
  return state;
}

std::vector<FinalLabel> Service::final_labels() const {
  std::shared_lock lock(mutex_);
  return book_.final_labels();
}

void Service::record_job(const JobStatus& status) {
  {
    std::lock_guard lock(jobs_mutex_);
    jobs_[status.id] = status;
    if (status.terminal()) training_active_ = false;
  }
  data_.jobs().append(to_json(status));
  jobs_changed_.notify_all();
}

JobStatus Service::start_training(const TrainRequest& request) {
  JobStatus status;
  {
    std::lock_guard lock(jobs_mutex_);
    if (training_active_) {
      fail(ErrorKind::kConflict, "a training job is already running");
    }
    training_active_ = true;
    status.id = "job-" + std::to_string(next_job_++);
    status.kind = JobKind::kFineTune;
    status.state = JobState::kQueued;
    jobs_[status.id] = status;
  }
  data_.jobs().append(to_json(status));
  std::lock_guard lock(jobs_mutex_);
  workers_.emplace_back([this, id = status.id, request] { run_training(id, request); });
  return status;
}

void Service::run_training(std::string job_id, TrainRequest request) {
  JobStatus status{job_id, JobKind::kFineTune, JobState::kRunning, json::object()};
  record_job(status);
  try {
    std::vector<TrainingExample> examples;
    {
      std::shared_lock lock(mutex_);
      const auto labels = book_.final_labels();
      examples = export_training_set(labels, corpus_);
    }
    ClassifierConfig config = config_.classifier;
    if (request.baseline) config.backend = *request.baseline ? Backend::kBaseline : Backend::kTransformer;
    if (request.seed) config.seed = *request.seed;
    if (request.epochs) config.epochs = *request.epochs;

    const DataSplit split = stratified_split(examples, request.ratio, config.seed);
    const ModelArtifact trained = fine_tune(split, config);
    const fs::path dir = fs::absolute(data_.models_dir() / job_id);
    trained.save(dir);
    auto model = std::make_shared<const ModelArtifact>(ModelArtifact::load(dir));

    const json metrics{{"job_id", job_id},
                       {"model", dir.string()},
                       {"train", to_json(evaluate_examples(*model, split.train))},
                       {"test", to_json(evaluate_examples(*model, split.test))}};
    write_json_file(data_.metrics_path(), metrics);
    write_json_file(data_.active_model_path(), {{"path", dir.string()}});
    set_model(model);

    status.state = JobState::kDone;
    status.summary = {{"model", dir.string()},
                      {"train_size", split.train.size()},
                      {"test_size", split.test.size()},
                      {"final_loss", model->summary().final_loss},
                      {"test_global_f1", metrics["test"]["metrics"]["global"]["f1"]}};
  } catch (const std::exception& e) {
    status.state = JobState::kFailed;
    status.summary = {{"error", e.what()}};
  }
  record_job(status);
}

JobStatus Service::job(std::string_view id) const {
  std::lock_guard lock(jobs_mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) fail(ErrorKind::kNotFound, "unknown job \"" + std::string(id) + "\"");
  return it->second;
}

JobStatus Service::wait_for(std::string_view id) const {
  std::unique_lock lock(jobs_mutex_);
  jobs_changed_.wait(lock, [&] {
    auto it = jobs_.find(id);
    return it == jobs_.end() || it->second.terminal();
  });
  auto it = jobs_.find(id);
  if (it == jobs_.end()) fail(ErrorKind::kNotFound, "unknown job \"" + std::string(id) + "\"");
  return it->second;
}

std::optional<json> Service::latest_metrics() const {
  if (!fs::exists(data_.metrics_path())) return std::nullopt;
  return read_json_file(data_.metrics_path());
}

}  // namespace sexism_alert
