#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <vector>

#include "sexism_alert/common.hpp"

namespace sexism_alert {

/// Append-only JSON Lines file with a single serialized writer.
class AppendLog {
 public:
  explicit AppendLog(std::filesystem::path path);

  void append(const json& record);
  /// All records currently in the file (empty when it does not exist).
  std::vector<json> replay() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
  std::ofstream out_;
};

/// Layout of a service data directory:
///   sources.jsonl, comments.jsonl, votes.jsonl, labels.jsonl, jobs.jsonl
///   annotation_queue.jsonl (optional), active_model.json,
///   metrics_latest.json, models/<job id>/
class DataDirectory {
 public:
  explicit DataDirectory(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path models_dir() const { return root_ / "models"; }
  std::filesystem::path metrics_path() const { return root_ / "metrics_latest.json"; }
  std::filesystem::path active_model_path() const { return root_ / "active_model.json"; }
  std::filesystem::path queue_path() const { return root_ / "annotation_queue.jsonl"; }

  AppendLog& sources() { return sources_; }
  AppendLog& comments() { return comments_; }
  AppendLog& votes() { return votes_; }
  AppendLog& labels() { return labels_; }
  AppendLog& jobs() { return jobs_; }

 private:
  std::filesystem::path root_;
  AppendLog sources_;
  AppendLog comments_;
  AppendLog votes_;
  AppendLog labels_;
  AppendLog jobs_;
};

}  // namespace sexism_alert
