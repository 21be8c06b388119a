#include "sexism_alert/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>

#include "sexism_alert/text.hpp"

namespace sexism_alert {

namespace {

constexpr char kMagic[4] = {'S', 'X', 'B', 'L'};
constexpr std::uint32_t kFormatVersion = 1;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

std::vector<std::string> folded_lexicon(const std::vector<std::string>& entries) {
  std::set<std::string> out;
  for (const auto& entry : entries) {
    for (auto& token : tokenize(entry)) out.insert(std::move(token));
  }
  return {out.begin(), out.end()};
}

struct Tokens {
  std::vector<std::string> tokens;
  bool truncated = false;
};

Tokens truncated_tokens(std::string_view text, std::size_t max_tokens) {
  Tokens t{tokenize(text), false};
  if (t.tokens.size() > max_tokens) {
    t.tokens.resize(max_tokens);
    t.truncated = true;
  }
  return t;
}

// Deterministic Fisher-Yates driven by splitmix64, identical on every
// platform (std::shuffle's output is library-specific).
void shuffle_indices(std::vector<Eigen::Index>& order, std::uint64_t seed) {
  std::uint64_t state = seed;
  for (std::size_t i = order.size(); i > 1; --i) {
    state = splitmix64(state);
    const auto j = static_cast<std::size_t>(state % i);
    std::swap(order[i - 1], order[j]);
  }
}

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof value);
  if (!in) fail(ErrorKind::kParse, "truncated baseline weights file");
  return value;
}

}  // namespace

BaselineModel::BaselineModel(std::vector<std::string> vocabulary,
                             Eigen::VectorXd weights, double bias,
                             std::vector<std::string> lexicon,
                             double decision_threshold, std::size_t max_tokens)
    : vocabulary_(std::move(vocabulary)),
      weights_(std::move(weights)),
      bias_(bias),
      lexicon_(folded_lexicon(lexicon)),
      decision_threshold_(decision_threshold),
      max_tokens_(max_tokens) {
  if (static_cast<Eigen::Index>(vocabulary_.size()) != weights_.size()) {
    fail(ErrorKind::kInvalidArgument, "vocabulary and weight sizes differ");
  }
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
    index_.emplace(vocabulary_[i], static_cast<Eigen::Index>(i));
  }
}

TextModel::Score BaselineModel::score_one(std::string_view text) const {
  const Tokens t = truncated_tokens(text, max_tokens_);
  std::map<Eigen::Index, double> counts;
  bool lexicon_hit = false;
  for (const auto& token : t.tokens) {
    if (auto it = index_.find(token); it != index_.end()) counts[it->second] += 1.0;
    if (std::binary_search(lexicon_.begin(), lexicon_.end(), token)) lexicon_hit = true;
  }
  double norm = 0.0;
  for (const auto& [_, c] : counts) norm += c * c;
  norm = std::sqrt(norm);
  double z = bias_;
  for (const auto& [i, c] : counts) z += weights_[i] * c / norm;
  double p = sigmoid(z);
  if (lexicon_hit) p = std::max(p, 0.5 * (1.0 + decision_threshold_));
  return {p, t.truncated};
}

std::vector<TextModel::Score> BaselineModel::score(
    std::span<const std::string> texts) const {
  std::vector<Score> out;
  out.reserve(texts.size());
  for (const auto& text : texts) out.push_back(score_one(text));
  return out;
}

void BaselineModel::save_weights(const std::filesystem::path& artifact_dir) const {
  std::ofstream out(artifact_dir / "weights.bin", std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + (artifact_dir / "weights.bin").string());
  out.write(kMagic, sizeof kMagic);
  write_pod(out, kFormatVersion);
  write_pod(out, static_cast<std::uint64_t>(vocabulary_.size()));
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
    write_pod(out, static_cast<std::uint32_t>(vocabulary_[i].size()));
    out.write(vocabulary_[i].data(), static_cast<std::streamsize>(vocabulary_[i].size()));
    write_pod(out, weights_[static_cast<Eigen::Index>(i)]);
  }
  write_pod(out, bias_);
}

std::shared_ptr<BaselineModel> BaselineModel::load(const std::filesystem::path& artifact_dir,
                                                   const ClassifierConfig& config) {
  const auto path = artifact_dir / "weights.bin";
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kNotFound, "cannot open " + path.string());
  char magic[4];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    fail(ErrorKind::kParse, path.string() + " is not a baseline weights file");
  }
  if (read_pod<std::uint32_t>(in) != kFormatVersion) {
    fail(ErrorKind::kParse, path.string() + ": unsupported format version");
  }
  const auto size = read_pod<std::uint64_t>(in);
  std::vector<std::string> vocabulary(size);
  Eigen::VectorXd weights(static_cast<Eigen::Index>(size));
  for (std::uint64_t i = 0; i < size; ++i) {
    const auto len = read_pod<std::uint32_t>(in);
    vocabulary[i].resize(len);
    in.read(vocabulary[i].data(), len);
    weights[static_cast<Eigen::Index>(i)] = read_pod<double>(in);
  }
  const double bias = read_pod<double>(in);
  return std::make_shared<BaselineModel>(std::move(vocabulary), std::move(weights), bias,
                                         config.baseline.lexicon,
                                         config.decision_threshold,
                                         config.max_sequence_length);
}

BaselineFit train_baseline(std::span<const TrainingExample> train,
                           const ClassifierConfig& config,
                           const std::map<Label, double>& class_weights) {
  config.validate();
  if (train.empty()) fail(ErrorKind::kInvalidArgument, "training set is empty");

  // Vocabulary: every token seen in the (truncated) training texts.
  std::vector<std::vector<std::string>> docs;
  docs.reserve(train.size());
  std::set<std::string> vocab_set;
  for (const auto& ex : train) {
    docs.push_back(truncated_tokens(ex.text, config.max_sequence_length).tokens);
    vocab_set.insert(docs.back().begin(), docs.back().end());
  }
  std::vector<std::string> vocabulary(vocab_set.begin(), vocab_set.end());
  std::unordered_map<std::string, Eigen::Index> index;
  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    index.emplace(vocabulary[i], static_cast<Eigen::Index>(i));
  }

  const auto n = static_cast<Eigen::Index>(train.size());
  const auto dim = static_cast<Eigen::Index>(vocabulary.size());
  std::vector<Eigen::Triplet<double>> triplets;
  for (Eigen::Index row = 0; row < n; ++row) {
    std::map<Eigen::Index, double> counts;
    for (const auto& token : docs[static_cast<std::size_t>(row)]) counts[index.at(token)] += 1.0;
    double norm = 0.0;
    for (const auto& [_, c] : counts) norm += c * c;
    norm = std::sqrt(norm);
    for (const auto& [col, c] : counts) triplets.emplace_back(row, col, c / norm);
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> features(n, dim);
  features.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::VectorXd targets(n);
  Eigen::VectorXd loss_weights(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Label label = train[static_cast<std::size_t>(i)].label;
    targets[i] = label == Label::kSexist ? 1.0 : 0.0;
    auto it = class_weights.find(label);
    loss_weights[i] = it == class_weights.end() ? 1.0 : it->second;
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
  double b = 0.0;
  Eigen::VectorXd m_w = Eigen::VectorXd::Zero(dim), v_w = Eigen::VectorXd::Zero(dim);
  double m_b = 0.0, v_b = 0.0;
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  const double lr = config.baseline.learning_rate;
  const double l2 = config.baseline.l2;
  std::size_t step = 0;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  BaselineFit fit;
  const auto batch = static_cast<Eigen::Index>(config.batch_size);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_indices(order, config.seed ^ splitmix64(epoch));
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index end = std::min(n, start + batch);
      Eigen::VectorXd grad_w = Eigen::VectorXd::Zero(dim);
      double grad_b = 0.0;
      for (Eigen::Index k = start; k < end; ++k) {
        const Eigen::Index i = order[static_cast<std::size_t>(k)];
        const double z = features.row(i).dot(w) + b;
        const double g = loss_weights[i] * (sigmoid(z) - targets[i]);
        grad_w += g * features.row(i).transpose();
        grad_b += g;
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      grad_w = grad_w * scale + l2 * w;
      grad_b *= scale;

      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      m_w = kBeta1 * m_w + (1.0 - kBeta1) * grad_w;
      v_w = kBeta2 * v_w + (1.0 - kBeta2) * grad_w.cwiseProduct(grad_w);
      m_b = kBeta1 * m_b + (1.0 - kBeta1) * grad_b;
      v_b = kBeta2 * v_b + (1.0 - kBeta2) * grad_b * grad_b;
      w.array() -= lr * (m_w.array() / c1) / ((v_w.array() / c2).sqrt() + kEps);
      b -= lr * (m_b / c1) / (std::sqrt(v_b / c2) + kEps);
    }

    const Eigen::VectorXd logits = (features * w).array() + b;
    double loss = 0.0;
    std::size_t correct = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      loss += loss_weights[i] * (softplus(logits[i]) - targets[i] * logits[i]);
      const bool positive = sigmoid(logits[i]) >= config.decision_threshold;
      if (positive == (targets[i] > 0.5)) ++correct;
    }
    fit.epochs.push_back({epoch, loss / static_cast<double>(n),
                          static_cast<double>(correct) / static_cast<double>(n)});
  }

  fit.model = std::make_shared<BaselineModel>(
      std::move(vocabulary), std::move(w), b, config.baseline.lexicon,
      config.decision_threshold, config.max_sequence_length);
  return fit;
}

}  // namespace sexism_alert
