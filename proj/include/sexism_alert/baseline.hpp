#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "sexism_alert/classifier.hpp"

namespace sexism_alert {

/// Logistic regression over L2-normalized token counts. Dependency-free,
/// deterministic, trainable in-process; used when the transformer base model
/// is not reachable.
class BaselineModel final : public TextModel {
 public:
  BaselineModel(std::vector<std::string> vocabulary, Eigen::VectorXd weights,
                double bias, std::vector<std::string> lexicon,
                double decision_threshold, std::size_t max_tokens);

  std::vector<Score> score(std::span<const std::string> texts) const override;
  void save_weights(const std::filesystem::path& artifact_dir) const override;

  static std::shared_ptr<BaselineModel> load(const std::filesystem::path& artifact_dir,
                                             const ClassifierConfig& config);

  Score score_one(std::string_view text) const;

  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  double bias() const { return bias_; }

 private:
  std::vector<std::string> vocabulary_;
  std::unordered_map<std::string, Eigen::Index> index_;
  Eigen::VectorXd weights_;
  double bias_;
  std::vector<std::string> lexicon_;
  double decision_threshold_;
  std::size_t max_tokens_;
};

struct BaselineFit {
  std::shared_ptr<const BaselineModel> model;
  std::vector<EpochStats> epochs;
};

/// Mini-batch Adam on the class-weighted log loss. Weights start at zero;
/// the config seed drives the batch order.
BaselineFit train_baseline(std::span<const TrainingExample> train,
                           const ClassifierConfig& config,
                           const std::map<Label, double>& class_weights);

}  // namespace sexism_alert
