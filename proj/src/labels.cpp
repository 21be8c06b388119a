#include "sexism_alert/labels.hpp"

namespace sexism_alert {

std::optional<Label> parse_label(std::string_view text) {
  if (text == "sexist") return Label::kSexist;
  if (text == "not_sexist") return Label::kNotSexist;
  return std::nullopt;
}

Label require_label(const json& record, const char* field) {
  const std::string text = require_string(record, field);
  auto label = parse_label(text);
  if (!label) {
    fail(ErrorKind::kParse, "unknown label \"" + text + "\"");
  }
  return *label;
}

std::vector<TrainingExample> load_training_set(const std::filesystem::path& path) {
  std::vector<TrainingExample> out;
  read_jsonl(path, [&](const json& record, std::size_t line) {
    try {
      TrainingExample ex;
      ex.text = require_string(record, "text");
      ex.label = require_label(record, "label");
      if (auto it = record.find("id"); it != record.end() && it->is_string()) {
        ex.id = it->get<std::string>();
      }
      out.push_back(std::move(ex));
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return out;
}

void save_training_set(const std::filesystem::path& path,
                       const std::vector<TrainingExample>& examples) {
  std::vector<json> records;
  records.reserve(examples.size());
  for (const auto& ex : examples) {
    records.push_back({{"text", ex.text}, {"label", to_string(ex.label)}});
  }
  write_jsonl(path, records);
}

}  // namespace sexism_alert
