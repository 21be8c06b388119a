#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "sexism_alert/classifier.hpp"

namespace sexism_alert {

/// Resolves a base model id to a local directory: the cache first, then a
/// download from the model hub. Never substitutes another model.
class ModelRepository {
 public:
  ModelRepository(std::filesystem::path cache_dir, std::string endpoint,
                  bool allow_download);

  /// SEXISM_ALERT_MODEL_CACHE (default ~/.cache/sexism-alert/models),
  /// SEXISM_ALERT_MODEL_ENDPOINT (default https://huggingface.co),
  /// SEXISM_ALERT_OFFLINE=1 disables downloads.
  static ModelRepository from_environment();

  const std::filesystem::path& cache_dir() const { return cache_dir_; }
  std::filesystem::path cached_path(std::string_view model_id) const;
  bool is_cached(std::string_view model_id) const;

  /// kUnavailable when the model is neither cached nor downloadable.
  std::filesystem::path resolve(std::string_view model_id) const;

 private:
  void download(std::string_view model_id, const std::filesystem::path& target) const;

  std::filesystem::path cache_dir_;
  std::string endpoint_;
  bool allow_download_;
};

/// Runs the helper script that wraps the Python transformers stack. The
/// interpreter comes from SEXISM_ALERT_PYTHON (default python3) and the
/// script from SEXISM_ALERT_BRIDGE (default: the copy in the source tree).
class TransformerBridge {
 public:
  static TransformerBridge from_environment();

  TransformerBridge(std::string python, std::filesystem::path script);

  /// Fine-tunes `base_dir` into `out_dir`; returns the per-epoch summary.
  std::vector<EpochStats> train(const std::filesystem::path& base_dir,
                                std::span<const TrainingExample> train,
                                const ClassifierConfig& config,
                                const std::map<Label, double>& class_weights,
                                const std::filesystem::path& out_dir) const;

  std::vector<TextModel::Score> predict(const std::filesystem::path& model_dir,
                                        std::span<const std::string> texts,
                                        std::size_t max_sequence_length) const;

 private:
  void run(const std::vector<std::string>& args) const;

  std::string python_;
  std::filesystem::path script_;
};

/// A fine-tuned transformer stored as a Hugging Face model directory.
class TransformerModel final : public TextModel {
 public:
  TransformerModel(std::filesystem::path model_dir, std::size_t max_sequence_length);

  std::vector<Score> score(std::span<const std::string> texts) const override;
  void save_weights(const std::filesystem::path& artifact_dir) const override;

  const std::filesystem::path& model_dir() const { return model_dir_; }

 private:
  std::filesystem::path model_dir_;
  std::size_t max_sequence_length_;
};

}  // namespace sexism_alert
