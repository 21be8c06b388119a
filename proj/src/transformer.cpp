#include "sexism_alert/transformer.hpp"

#include <curl/curl.h>
#include <stdlib.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#ifndef SEXISM_ALERT_DEFAULT_BRIDGE
#define SEXISM_ALERT_DEFAULT_BRIDGE "tools/hf_bridge.py"
#endif

namespace sexism_alert {

namespace fs = std::filesystem;

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* value = std::getenv(name);
  return value != nullptr && *value != '\0' ? std::string(value) : std::move(fallback);
}

std::string shell_quote(const std::string& arg) {
  std::string out = "'";
  for (char c : arg) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += "'";
  return out;
}

fs::path make_temp_dir(const std::string& prefix) {
  std::string pattern = (fs::temp_directory_path() / (prefix + "XXXXXX")).string();
  if (mkdtemp(pattern.data()) == nullptr) {
    fail(ErrorKind::kIo, "cannot create a temporary directory");
  }
  return pattern;
}

std::size_t write_to_stream(char* data, std::size_t size, std::size_t count, void* user) {
  static_cast<std::ofstream*>(user)->write(data, static_cast<std::streamsize>(size * count));
  return size * count;
}

// Returns the HTTP status, or -1 on a transport failure (message in `error`).
long fetch_file(const std::string& url, const fs::path& target, std::string& error) {
  std::ofstream out(target, std::ios::binary | std::ios::trunc);
  if (!out) {
    error = "cannot write " + target.string();
    return -1;
  }
  CURL* curl = curl_easy_init();
  if (curl == nullptr) {
    error = "libcurl initialisation failed";
    return -1;
  }
  curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, write_to_stream);
  curl_easy_setopt(curl, CURLOPT_WRITEDATA, &out);
  curl_easy_setopt(curl, CURLOPT_CONNECTTIMEOUT, 10L);
  curl_easy_setopt(curl, CURLOPT_FAILONERROR, 0L);
  const CURLcode rc = curl_easy_perform(curl);
  long status = -1;
  if (rc == CURLE_OK) {
    curl_easy_getinfo(curl, CURLINFO_RESPONSE_CODE, &status);
  } else {
    error = curl_easy_strerror(rc);
  }
  curl_easy_cleanup(curl);
  return status;
}

}  // namespace

ModelRepository::ModelRepository(fs::path cache_dir, std::string endpoint,
                                 bool allow_download)
    : cache_dir_(std::move(cache_dir)),
      endpoint_(std::move(endpoint)),
      allow_download_(allow_download) {}

ModelRepository ModelRepository::from_environment() {
  const std::string home = env_or("HOME", ".");
  return ModelRepository(
      env_or("SEXISM_ALERT_MODEL_CACHE", home + "/.cache/sexism-alert/models"),
      env_or("SEXISM_ALERT_MODEL_ENDPOINT", "https://huggingface.co"),
      env_or("SEXISM_ALERT_OFFLINE", "0") != "1");
}

fs::path ModelRepository::cached_path(std::string_view model_id) const {
  std::string dir(model_id);
  for (std::size_t pos = 0; (pos = dir.find('/', pos)) != std::string::npos;) {
    dir.replace(pos, 1, "--");
  }
  return cache_dir_ / dir;
}

bool ModelRepository::is_cached(std::string_view model_id) const {
  const fs::path dir = cached_path(model_id);
  return fs::exists(dir / "config.json") &&
         (fs::exists(dir / "model.safetensors") || fs::exists(dir / "pytorch_model.bin"));
}

fs::path ModelRepository::resolve(std::string_view model_id) const {
  if (model_id.empty()) {
    fail(ErrorKind::kInvalidArgument, "base_model_id must not be empty");
  }
  if (is_cached(model_id)) return cached_path(model_id);
  if (!allow_download_) {
    fail(ErrorKind::kUnavailable, "base model \"" + std::string(model_id) +
                                      "\" is not cached in " + cache_dir_.string() +
                                      " and downloads are disabled");
  }
  download(model_id, cached_path(model_id));
  return cached_path(model_id);
}

void ModelRepository::download(std::string_view model_id, const fs::path& target) const {
  static const bool curl_ready = curl_global_init(CURL_GLOBAL_DEFAULT) == CURLE_OK;
  if (!curl_ready) fail(ErrorKind::kUnavailable, "libcurl initialisation failed");

  fs::create_directories(cache_dir_);
  const fs::path staging = make_temp_dir("sexism-alert-fetch-");
  const std::string base = endpoint_ + "/" + std::string(model_id) + "/resolve/main/";
  auto unavailable = [&](const std::string& why) {
    fs::remove_all(staging);
    fail(ErrorKind::kUnavailable, "cannot fetch base model \"" + std::string(model_id) +
                                      "\" from " + endpoint_ + " (" + why +
                                      ") and no cached copy exists in " +
                                      cache_dir_.string());
  };

  std::string error;
  long status = fetch_file(base + "config.json", staging / "config.json", error);
  if (status != 200) {
    unavailable(status < 0 ? error : "HTTP " + std::to_string(status));
  }
  status = fetch_file(base + "model.safetensors", staging / "model.safetensors", error);
  if (status != 200) {
    fs::remove(staging / "model.safetensors");
    status = fetch_file(base + "pytorch_model.bin", staging / "pytorch_model.bin", error);
    if (status != 200) {
      unavailable("no weights file: " +
                  (status < 0 ? error : "HTTP " + std::to_string(status)));
    }
  }
  for (const char* optional : {"tokenizer_config.json", "vocab.txt",
                               "special_tokens_map.json", "tokenizer.json"}) {
    if (fetch_file(base + optional, staging / optional, error) != 200) {
      fs::remove(staging / optional);
    }
  }
  fs::remove_all(target);
  fs::create_directories(target.parent_path());
  fs::rename(staging, target);
}

TransformerBridge::TransformerBridge(std::string python, fs::path script)
    : python_(std::move(python)), script_(std::move(script)) {}

TransformerBridge TransformerBridge::from_environment() {
  return TransformerBridge(env_or("SEXISM_ALERT_PYTHON", "python3"),
                           env_or("SEXISM_ALERT_BRIDGE", SEXISM_ALERT_DEFAULT_BRIDGE));
}

void TransformerBridge::run(const std::vector<std::string>& args) const {
  if (!fs::exists(script_)) {
    fail(ErrorKind::kUnavailable, "transformer bridge script not found: " + script_.string());
  }
  const fs::path log = make_temp_dir("sexism-alert-bridge-") / "stderr.log";
  std::string command = shell_quote(python_) + " " + shell_quote(script_.string());
  for (const auto& arg : args) command += " " + shell_quote(arg);
  command += " 2>" + shell_quote(log.string());
  const int rc = std::system(command.c_str());
  if (rc != 0) {
    std::ifstream in(log);
    std::stringstream tail;
    tail << in.rdbuf();
    std::string message = tail.str();
    if (message.size() > 2000) message = message.substr(message.size() - 2000);
    fail(ErrorKind::kUnavailable, "transformer bridge failed (exit " +
                                      std::to_string(rc) + "): " + message);
  }
  fs::remove_all(log.parent_path());
}

std::vector<EpochStats> TransformerBridge::train(
    const fs::path& base_dir, std::span<const TrainingExample> train,
    const ClassifierConfig& config, const std::map<Label, double>& class_weights,
    const fs::path& out_dir) const {
  const fs::path work = make_temp_dir("sexism-alert-train-");
  std::vector<TrainingExample> examples(train.begin(), train.end());
  save_training_set(work / "train.jsonl", examples);
  auto weight = [&](Label l) {
    auto it = class_weights.find(l);
    return it == class_weights.end() ? 1.0 : it->second;
  };
  std::ostringstream w_pos, w_neg, lr;
  w_pos.precision(17);
  w_neg.precision(17);
  lr.precision(17);
  w_pos << weight(Label::kSexist);
  w_neg << weight(Label::kNotSexist);
  lr << config.learning_rate;
  run({"train", "--base", base_dir.string(), "--train", (work / "train.jsonl").string(),
       "--out", out_dir.string(), "--summary", (work / "summary.json").string(),
       "--epochs", std::to_string(config.epochs), "--lr", lr.str(), "--batch-size",
       std::to_string(config.batch_size), "--max-length",
       std::to_string(config.max_sequence_length), "--seed", std::to_string(config.seed),
       "--weight-sexist", w_pos.str(), "--weight-not-sexist", w_neg.str()});
  const json summary = read_json_file(work / "summary.json");
  std::vector<EpochStats> epochs;
  for (const auto& e : summary.at("epochs")) {
    epochs.push_back({e.at("epoch").get<std::size_t>(), e.at("train_loss").get<double>(),
                      e.value("train_accuracy", 0.0)});
  }
  fs::remove_all(work);
  return epochs;
}

std::vector<TextModel::Score> TransformerBridge::predict(
    const fs::path& model_dir, std::span<const std::string> texts,
    std::size_t max_sequence_length) const {
  const fs::path work = make_temp_dir("sexism-alert-predict-");
  std::vector<json> inputs;
  for (const auto& t : texts) inputs.push_back({{"text", t}});
  write_jsonl(work / "inputs.jsonl", inputs);
  run({"predict", "--model", model_dir.string(), "--input",
       (work / "inputs.jsonl").string(), "--output", (work / "scores.jsonl").string(),
       "--max-length", std::to_string(max_sequence_length)});
  std::vector<TextModel::Score> scores;
  for (const auto& record : read_jsonl(work / "scores.jsonl")) {
    scores.push_back({record.at("score").get<double>(), record.value("truncated", false)});
  }
  fs::remove_all(work);
  if (scores.size() != texts.size()) {
    fail(ErrorKind::kUnavailable, "transformer bridge returned a wrong number of scores");
  }
  return scores;
}

TransformerModel::TransformerModel(fs::path model_dir, std::size_t max_sequence_length)
    : model_dir_(std::move(model_dir)), max_sequence_length_(max_sequence_length) {}

std::vector<TextModel::Score> TransformerModel::score(
    std::span<const std::string> texts) const {
  if (texts.empty()) return {};
  return TransformerBridge::from_environment().predict(model_dir_, texts,
                                                       max_sequence_length_);
}

void TransformerModel::save_weights(const fs::path& artifact_dir) const {
  const fs::path target = artifact_dir / "weights";
  if (fs::exists(target) && fs::equivalent(target, model_dir_)) return;
  fs::remove_all(target);
  fs::copy(model_dir_, target, fs::copy_options::recursive);
}

}  // namespace sexism_alert
