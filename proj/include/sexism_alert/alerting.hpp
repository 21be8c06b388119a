#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sexism_alert/common.hpp"
#include "sexism_alert/labels.hpp"

namespace sexism_alert {

/// Ordered green < yellow < red.
enum class Color { kGreen, kYellow, kRed };

std::string_view to_string(Color color);
std::optional<Color> parse_color(std::string_view text);

struct AlertThresholds {
  double red_min = 0.05;
  double yellow_min = 0.025;
  std::size_t min_comments = 100;

  /// 0 < yellow_min < red_min < 1 and min_comments >= 1.
  void validate() const;
};

/// Parses "red=0.05,yellow=0.025,min=100"; omitted keys keep `base`.
AlertThresholds parse_thresholds(std::string_view spec, AlertThresholds base = {});
json to_json(const AlertThresholds& thresholds);

/// green: p <= yellow_min; yellow: yellow_min < p <= red_min; red: p > red_min.
Color colorize(double proportion, const AlertThresholds& thresholds = {});

/// True when the proportion sits exactly on a threshold.
bool on_boundary(double proportion, const AlertThresholds& thresholds = {});

struct SourceAlert {
  std::string source_id;
  std::size_t n_comments = 0;
  std::size_t sexist_count = 0;
  double sexist_proportion = 0.0;
  std::optional<Color> color;  // empty => insufficient data
  bool boundary = false;

  bool insufficient_data() const { return !color.has_value(); }
  std::string status() const;
};

json to_json(const SourceAlert& alert);
SourceAlert source_alert_from_json(const json& record);

struct SourcePrediction {
  std::string source_id;
  std::string comment_id;
  Label label = Label::kNotSexist;
  double score = 0.0;
};

SourcePrediction source_prediction_from_json(const json& record);

/// Proportion of "sexist" over all predictions of the source. Below
/// min_comments the alert is insufficient-data. Predictions for another
/// source are kInvalidArgument.
SourceAlert aggregate_source(std::string_view source_id,
                             std::span<const SourcePrediction> predictions,
                             const AlertThresholds& thresholds = {});

/// One alert per source id present in the predictions, ordered by id.
std::vector<SourceAlert> aggregate_sources(std::span<const SourcePrediction> predictions,
                                           const AlertThresholds& thresholds = {});

struct ColorMismatch {
  std::string source_id;
  Color manual;
  Color predicted;
};

struct ColorAgreement {
  double fraction = 0.0;
  std::size_t matches = 0;
  std::size_t total = 0;
  std::vector<ColorMismatch> mismatches;
  std::vector<ColorMismatch> severe_mismatches;  // green <-> red
};

/// Exact-match rate between two colorings of the same sources. Differing key
/// sets or empty maps are kInvalidArgument.
ColorAgreement color_agreement(const std::map<std::string, Color>& manual,
                               const std::map<std::string, Color>& predicted);

json to_json(const ColorAgreement& agreement);

struct AlertRow {
  std::string source_id;
  std::optional<SourceAlert> manual;
  SourceAlert predicted;
};

/// Source / % sexist / color table, with manual columns when available.
std::string render_alert_table(std::span<const AlertRow> rows, bool ansi_colors,
                               const ColorAgreement* agreement = nullptr);

}  // namespace sexism_alert
