#include "sexism_alert/classifier.hpp"

#include <stdlib.h>

#include <algorithm>
#include <cmath>

#include "sexism_alert/baseline.hpp"
#include "sexism_alert/text.hpp"
#include "sexism_alert/transformer.hpp"

namespace sexism_alert {

namespace fs = std::filesystem;

std::string_view to_string(ClassWeightMode mode) {
  return mode == ClassWeightMode::kNone ? "none" : "inverse_frequency";
}

std::string_view to_string(Backend backend) {
  return backend == Backend::kBaseline ? "baseline" : "transformer";
}

void ClassifierConfig::validate() const {
  if (!(decision_threshold > 0.0 && decision_threshold < 1.0)) {
    fail(ErrorKind::kInvalidArgument, "decision_threshold must lie in (0, 1)");
  }
  if (epochs < 1) fail(ErrorKind::kInvalidArgument, "epochs must be at least 1");
  if (max_sequence_length < 8) {
    fail(ErrorKind::kInvalidArgument, "max_sequence_length must be at least 8");
  }
  if (batch_size < 1) fail(ErrorKind::kInvalidArgument, "batch_size must be at least 1");
  if (!(learning_rate > 0.0) || !(baseline.learning_rate > 0.0)) {
    fail(ErrorKind::kInvalidArgument, "learning rates must be positive");
  }
  if (!(baseline.l2 >= 0.0)) fail(ErrorKind::kInvalidArgument, "l2 must be non-negative");
  if (backend == Backend::kTransformer && base_model_id.empty()) {
    fail(ErrorKind::kInvalidArgument, "base_model_id must not be empty");
  }
}

json to_json(const ClassifierConfig& config) {
  return {{"backend", to_string(config.backend)},
          {"base_model_id", config.base_model_id},
          {"max_sequence_length", config.max_sequence_length},
          {"epochs", config.epochs},
          {"learning_rate", config.learning_rate},
          {"batch_size", config.batch_size},
          {"class_weight_mode", to_string(config.class_weight_mode)},
          {"decision_threshold", config.decision_threshold},
          {"seed", config.seed},
          {"baseline",
           {{"learning_rate", config.baseline.learning_rate},
            {"l2", config.baseline.l2},
            {"lexicon", config.baseline.lexicon}}}};
}

ClassifierConfig config_from_json(const json& doc) {
  ClassifierConfig c;
  try {
    if (doc.contains("backend")) {
      const auto b = doc.at("backend").get<std::string>();
      if (b == "baseline") {
        c.backend = Backend::kBaseline;
      } else if (b == "transformer") {
        c.backend = Backend::kTransformer;
      } else {
        fail(ErrorKind::kParse, "unknown backend \"" + b + "\"");
      }
    }
    c.base_model_id = doc.value("base_model_id", c.base_model_id);
    c.max_sequence_length = doc.value("max_sequence_length", c.max_sequence_length);
    c.epochs = doc.value("epochs", c.epochs);
    c.learning_rate = doc.value("learning_rate", c.learning_rate);
    c.batch_size = doc.value("batch_size", c.batch_size);
    if (doc.contains("class_weight_mode")) {
      const auto m = doc.at("class_weight_mode").get<std::string>();
      if (m == "none") {
        c.class_weight_mode = ClassWeightMode::kNone;
      } else if (m == "inverse_frequency") {
        c.class_weight_mode = ClassWeightMode::kInverseFrequency;
      } else {
        fail(ErrorKind::kParse, "unknown class_weight_mode \"" + m + "\"");
      }
    }
    c.decision_threshold = doc.value("decision_threshold", c.decision_threshold);
    c.seed = doc.value("seed", c.seed);
    if (doc.contains("baseline")) {
      const json& b = doc.at("baseline");
      c.baseline.learning_rate = b.value("learning_rate", c.baseline.learning_rate);
      c.baseline.l2 = b.value("l2", c.baseline.l2);
      c.baseline.lexicon = b.value("lexicon", c.baseline.lexicon);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::kParse, std::string("invalid classifier config: ") + e.what());
  }
  c.validate();
  return c;
}

std::map<Label, std::size_t> class_counts(std::span<const TrainingExample> examples) {
  std::map<Label, std::size_t> counts{{Label::kSexist, 0}, {Label::kNotSexist, 0}};
  for (const auto& ex : examples) ++counts[ex.label];
  return counts;
}

DataSplit stratified_split(std::span<const TrainingExample> examples, double ratio,
                           std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    fail(ErrorKind::kInvalidArgument, "split ratio must lie in (0, 1)");
  }
  std::map<Label, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < examples.size(); ++i) by_class[examples[i].label].push_back(i);
  for (Label label : {Label::kSexist, Label::kNotSexist}) {
    if (by_class[label].size() < 2) {
      fail(ErrorKind::kInvalidArgument, "class \"" + std::string(to_string(label)) +
                                            "\" has fewer than 2 examples");
    }
  }

  const auto n = static_cast<double>(examples.size());
  const auto train_total = static_cast<std::size_t>(std::floor(ratio * n));

  // Floor of each class's ideal share, then hand out the remaining slots by
  // largest fractional part (class order breaks ties).
  struct Share {
    Label label;
    std::size_t take;
    double remainder;
  };
  std::vector<Share> shares;
  std::size_t assigned = 0;
  for (auto& [label, members] : by_class) {
    const double ideal = ratio * static_cast<double>(members.size());
    const auto take = static_cast<std::size_t>(std::floor(ideal));
    shares.push_back({label, take, ideal - std::floor(ideal)});
    assigned += take;
  }
  std::vector<Share*> order;
  for (auto& s : shares) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(),
                   [](const Share* a, const Share* b) { return a->remainder > b->remainder; });
  for (std::size_t i = 0; assigned < train_total; ++i) {
    ++order[i % order.size()]->take;
    ++assigned;
  }

  std::vector<bool> in_train(examples.size(), false);
  for (const auto& s : shares) {
    auto members = by_class[s.label];
    std::vector<std::pair<std::uint64_t, std::size_t>> ranked;
    for (std::size_t idx : members) {
      ranked.emplace_back(splitmix64(seed ^ splitmix64(idx)), idx);
    }
    std::sort(ranked.begin(), ranked.end());
    for (std::size_t k = 0; k < s.take; ++k) in_train[ranked[k].second] = true;
  }

  DataSplit split;
  split.ratio = ratio;
  split.seed = seed;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    (in_train[i] ? split.train : split.test).push_back(examples[i]);
  }
  return split;
}

json to_json(const Prediction& prediction) {
  return {{"comment_id", prediction.key},
          {"label", to_string(prediction.label)},
          {"score", prediction.score},
          {"truncated", prediction.truncated}};
}

json to_json(const TrainingSummary& summary) {
  json epochs = json::array();
  for (const auto& e : summary.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"train_accuracy", e.train_accuracy}});
  }
  json weights = json::object();
  for (const auto& [label, w] : summary.class_weights) weights[std::string(to_string(label))] = w;
  return {{"epochs", epochs},
          {"final_loss", summary.final_loss},
          {"class_weights", weights},
          {"train_size", summary.train_size},
          {"test_size", summary.test_size}};
}

TrainingSummary training_summary_from_json(const json& doc) {
  TrainingSummary s;
  for (const auto& e : doc.at("epochs")) {
    s.epochs.push_back({e.at("epoch").get<std::size_t>(), e.at("train_loss").get<double>(),
                        e.value("train_accuracy", 0.0)});
  }
  s.final_loss = doc.value("final_loss", 0.0);
  for (const auto& [name, w] : doc.at("class_weights").items()) {
    if (auto label = parse_label(name)) s.class_weights[*label] = w.get<double>();
  }
  s.train_size = doc.value("train_size", std::size_t{0});
  s.test_size = doc.value("test_size", std::size_t{0});
  return s;
}

ModelArtifact::ModelArtifact(ClassifierConfig config, TrainingSummary summary,
                             std::shared_ptr<const TextModel> model)
    : config_(std::move(config)), summary_(std::move(summary)), model_(std::move(model)) {
  if (!model_) fail(ErrorKind::kInvalidArgument, "model artifact without a model");
}

void ModelArtifact::save(const fs::path& dir) const {
  fs::create_directories(dir);
  if (fs::exists(dir / "config.json")) {
    fail(ErrorKind::kAlreadyExists,
         "artifact directory " + dir.string() + " already holds a config snapshot");
  }
  model_->save_weights(dir);
  write_json_file(dir / "training_summary.json", to_json(summary_));
  write_json_file(dir / "config.json", to_json(config_));
}

ModelArtifact ModelArtifact::load(const fs::path& dir) {
  ClassifierConfig config = config_from_json(read_json_file(dir / "config.json"));
  TrainingSummary summary = training_summary_from_json(read_json_file(dir / "training_summary.json"));
  std::shared_ptr<const TextModel> model;
  if (config.backend == Backend::kBaseline) {
    model = BaselineModel::load(dir, config);
  } else {
    if (!fs::exists(dir / "weights" / "config.json")) {
      fail(ErrorKind::kNotFound, "artifact " + dir.string() + " has no transformer weights");
    }
    model = std::make_shared<TransformerModel>(fs::absolute(dir / "weights"),
                                               config.max_sequence_length);
  }
  return ModelArtifact(std::move(config), std::move(summary), std::move(model));
}

namespace {

Prediction make_prediction(const ModelArtifact& model, const TextModel::Score& s,
                           std::string key) {
  Prediction p;
  p.key = std::move(key);
  p.score = std::clamp(s.probability, 0.0, 1.0);
  p.label = p.score >= model.config().decision_threshold ? Label::kSexist : Label::kNotSexist;
  p.truncated = s.truncated;
  return p;
}

}  // namespace

Prediction predict(const ModelArtifact& model, std::string_view text, std::string key) {
  std::string normalized = normalize_text(text);
  if (normalized.empty()) fail(ErrorKind::kInvalidArgument, "text must not be empty");
  const std::string input[] = {std::move(normalized)};
  const auto scores = model.model().score(input);
  return make_prediction(model, scores.at(0), std::move(key));
}

std::vector<BatchItem> predict_batch(const ModelArtifact& model,
                                     std::span<const std::string> texts) {
  std::vector<BatchItem> out(texts.size());
  std::vector<std::string> valid;
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    try {
      std::string normalized = normalize_text(texts[i]);
      if (normalized.empty()) fail(ErrorKind::kInvalidArgument, "text must not be empty");
      valid.push_back(std::move(normalized));
      positions.push_back(i);
    } catch (const Error& e) {
      out[i].error = e.what();
    }
  }
  if (valid.empty()) return out;
  try {
    const auto scores = model.model().score(valid);
    for (std::size_t k = 0; k < positions.size(); ++k) {
      out[positions[k]].prediction = make_prediction(model, scores[k], {});
    }
  } catch (const Error& e) {
    for (std::size_t pos : positions) out[pos].error = e.what();
  }
  return out;
}

ModelArtifact fine_tune(const DataSplit& split, const ClassifierConfig& config,
                        const ModelRepository* repository) {
  config.validate();
  if (split.train.empty()) fail(ErrorKind::kInvalidArgument, "training set is empty");
  const auto counts = class_counts(split.train);
  for (const auto& [label, n] : counts) {
    if (n == 0) {
      fail(ErrorKind::kInvalidArgument, "training set has no \"" +
                                            std::string(to_string(label)) + "\" examples");
    }
  }
  const auto weights = compute_class_weights(counts, config.class_weight_mode);

  TrainingSummary summary;
  summary.class_weights = weights;
  summary.train_size = split.train.size();
  summary.test_size = split.test.size();

  std::shared_ptr<const TextModel> model;
  if (config.backend == Backend::kBaseline) {
    BaselineFit fit = train_baseline(split.train, config, weights);
    summary.epochs = std::move(fit.epochs);
    model = std::move(fit.model);
  } else {
    const ModelRepository env_repo = ModelRepository::from_environment();
    const ModelRepository& repo = repository != nullptr ? *repository : env_repo;
    const fs::path base = repo.resolve(config.base_model_id);
    std::string pattern = (fs::temp_directory_path() / "sexism-alert-model-XXXXXX").string();
    if (mkdtemp(pattern.data()) == nullptr) {
      fail(ErrorKind::kIo, "cannot create a model working directory");
    }
    const fs::path out_dir = fs::path(pattern) / "weights";
    summary.epochs = TransformerBridge::from_environment().train(base, split.train, config,
                                                                 weights, out_dir);
    model = std::make_shared<TransformerModel>(out_dir, config.max_sequence_length);
  }
  if (!summary.epochs.empty()) summary.final_loss = summary.epochs.back().train_loss;
  return ModelArtifact(config, std::move(summary), std::move(model));
}

}  // namespace sexism_alert
