#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sexism_alert/common.hpp"
#include "sexism_alert/labels.hpp"

namespace sexism_alert {

enum class ClassWeightMode { kNone, kInverseFrequency };
enum class Backend { kTransformer, kBaseline };

std::string_view to_string(ClassWeightMode mode);
std::string_view to_string(Backend backend);

struct BaselineOptions {
  double learning_rate = 0.1;  // Adam step size
  double l2 = 1e-4;
  /// Tokens that force a "sexist" decision whenever present.
  std::vector<std::string> lexicon;
};

struct ClassifierConfig {
  Backend backend = Backend::kTransformer;
  std::string base_model_id = "Hate-speech-CNERG/dehatebert-mono-spanish";
  std::size_t max_sequence_length = 128;
  std::size_t epochs = 3;
  double learning_rate = 2e-5;
  std::size_t batch_size = 16;
  ClassWeightMode class_weight_mode = ClassWeightMode::kInverseFrequency;
  double decision_threshold = 0.5;
  std::uint64_t seed = 42;
  BaselineOptions baseline;

  void validate() const;
};

json to_json(const ClassifierConfig& config);
/// Missing keys keep their defaults; present keys are validated.
ClassifierConfig config_from_json(const json& doc);

struct DataSplit {
  std::vector<TrainingExample> train;
  std::vector<TrainingExample> test;
  double ratio = 0.8;
  std::uint64_t seed = 0;
};

/// |train| = floor(ratio * N); each class contributes floor or ceil of its
/// ideal share. Every class needs at least two examples. Order inside each
/// part follows the input order.
DataSplit stratified_split(std::span<const TrainingExample> examples, double ratio,
                           std::uint64_t seed);

/// kNone: every weight 1. kInverseFrequency: weight(c) = N / (K * n_c), so
/// that sum_c n_c * weight(c) = N.
template <typename Key>
std::map<Key, double> compute_class_weights(const std::map<Key, std::size_t>& counts,
                                            ClassWeightMode mode) {
  if (counts.empty()) {
    fail(ErrorKind::kInvalidArgument, "class weights need at least one class");
  }
  std::map<Key, double> weights;
  if (mode == ClassWeightMode::kNone) {
    for (const auto& [key, _] : counts) weights.emplace(key, 1.0);
    return weights;
  }
  std::size_t total = 0;
  for (const auto& [_, n] : counts) {
    if (n == 0) {
      fail(ErrorKind::kInvalidArgument,
           "inverse-frequency weighting is undefined for an empty class");
    }
    total += n;
  }
  const double k = static_cast<double>(counts.size());
  for (const auto& [key, n] : counts) {
    weights.emplace(key, static_cast<double>(total) / (k * static_cast<double>(n)));
  }
  return weights;
}

std::map<Label, std::size_t> class_counts(std::span<const TrainingExample> examples);

struct Prediction {
  std::string key;
  Label label = Label::kNotSexist;
  double score = 0.0;  // probability of "sexist"
  bool truncated = false;
};

json to_json(const Prediction& prediction);

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
};

struct TrainingSummary {
  std::vector<EpochStats> epochs;
  double final_loss = 0.0;
  std::map<Label, double> class_weights;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

json to_json(const TrainingSummary& summary);
TrainingSummary training_summary_from_json(const json& doc);

/// Scores texts with the probability of the positive class.
class TextModel {
 public:
  struct Score {
    double probability = 0.0;
    bool truncated = false;
  };

  virtual ~TextModel() = default;
  virtual std::vector<Score> score(std::span<const std::string> texts) const = 0;
  /// Writes the weights blob into an artifact directory.
  virtual void save_weights(const std::filesystem::path& artifact_dir) const = 0;
};

/// A trained classifier: immutable model plus the config snapshot it was
/// trained with. Safe to share across threads.
class ModelArtifact {
 public:
  ModelArtifact(ClassifierConfig config, TrainingSummary summary,
                std::shared_ptr<const TextModel> model);

  const ClassifierConfig& config() const { return config_; }
  const TrainingSummary& summary() const { return summary_; }
  const TextModel& model() const { return *model_; }

  /// Directory layout: weights blob, config.json, training_summary.json.
  void save(const std::filesystem::path& dir) const;
  static ModelArtifact load(const std::filesystem::path& dir);

 private:
  ClassifierConfig config_;
  TrainingSummary summary_;
  std::shared_ptr<const TextModel> model_;
};

struct BatchItem {
  std::optional<Prediction> prediction;
  std::string error;

  bool ok() const { return prediction.has_value(); }
};

/// The text is NFC-normalized and trimmed first; blank text is
/// kInvalidArgument. Over-long input is truncated and flagged.
Prediction predict(const ModelArtifact& model, std::string_view text,
                   std::string key = {});

/// Element-wise predict; a failing item fills its error slot instead of
/// aborting the batch. Output order matches input order.
std::vector<BatchItem> predict_batch(const ModelArtifact& model,
                                     std::span<const std::string> texts);

class ModelRepository;

/// Trains on split.train with class-weighted cross-entropy. The baseline
/// backend runs in-process; the transformer backend resolves the base model
/// through `repository` (or the environment-configured one when null) and
/// never falls back silently.
ModelArtifact fine_tune(const DataSplit& split, const ClassifierConfig& config,
                        const ModelRepository* repository = nullptr);

}  // namespace sexism_alert
