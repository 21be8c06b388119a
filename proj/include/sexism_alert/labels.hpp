#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sexism_alert/common.hpp"

namespace sexism_alert {

// Binary classification target. The positive class is kSexist.
enum class Label { kSexist, kNotSexist };

constexpr std::string_view to_string(Label label) {
  return label == Label::kSexist ? "sexist" : "not_sexist";
}

std::optional<Label> parse_label(std::string_view text);
Label require_label(const json& record, const char* field);

struct TrainingExample {
  std::string id;  // empty when the source file carries no id
  std::string text;
  Label label = Label::kNotSexist;

  friend bool operator==(const TrainingExample&, const TrainingExample&) = default;
};

/// {"text","label"} records; an optional "id" is kept when present.
std::vector<TrainingExample> load_training_set(const std::filesystem::path& path);
void save_training_set(const std::filesystem::path& path,
                       const std::vector<TrainingExample>& examples);

}  // namespace sexism_alert
