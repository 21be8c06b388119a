#include "sexism_alert/alerting.hpp"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace sexism_alert {

std::string_view to_string(Color color) {
  switch (color) {
    case Color::kGreen: return "green";
    case Color::kYellow: return "yellow";
    case Color::kRed: return "red";
  }
  return "unknown";
}

std::optional<Color> parse_color(std::string_view text) {
  if (text == "green") return Color::kGreen;
  if (text == "yellow") return Color::kYellow;
  if (text == "red") return Color::kRed;
  return std::nullopt;
}

void AlertThresholds::validate() const {
  if (!(0.0 < yellow_min && yellow_min < red_min && red_min < 1.0)) {
    fail(ErrorKind::kInvalidArgument,
         "thresholds must satisfy 0 < yellow_min < red_min < 1");
  }
  if (min_comments < 1) {
    fail(ErrorKind::kInvalidArgument, "min_comments must be at least 1");
  }
}

AlertThresholds parse_thresholds(std::string_view spec, AlertThresholds base) {
  while (!spec.empty()) {
    const auto comma = spec.find(',');
    const std::string_view item = spec.substr(0, comma);
    spec = comma == std::string_view::npos ? std::string_view{} : spec.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorKind::kInvalidArgument, "malformed threshold \"" + std::string(item) + "\"");
    }
    const std::string key(item.substr(0, eq));
    const std::string value(item.substr(eq + 1));
    try {
      std::size_t used = 0;
      if (key == "red") {
        base.red_min = std::stod(value, &used);
      } else if (key == "yellow") {
        base.yellow_min = std::stod(value, &used);
      } else if (key == "min") {
        base.min_comments = std::stoul(value, &used);
      } else {
        fail(ErrorKind::kInvalidArgument, "unknown threshold key \"" + key + "\"");
      }
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::logic_error&) {
      fail(ErrorKind::kInvalidArgument, "malformed threshold value \"" + value + "\"");
    }
  }
  base.validate();
  return base;
}

json to_json(const AlertThresholds& t) {
  return {{"red_min", t.red_min}, {"yellow_min", t.yellow_min}, {"min_comments", t.min_comments}};
}

Color colorize(double proportion, const AlertThresholds& thresholds) {
  thresholds.validate();
  if (!(proportion >= 0.0 && proportion <= 1.0)) {
    fail(ErrorKind::kInvalidArgument, "proportion must lie in [0, 1]");
  }
  if (proportion > thresholds.red_min) return Color::kRed;
  if (proportion > thresholds.yellow_min) return Color::kYellow;
  return Color::kGreen;
}

bool on_boundary(double proportion, const AlertThresholds& thresholds) {
  return proportion == thresholds.red_min || proportion == thresholds.yellow_min;
}

std::string SourceAlert::status() const {
  return color ? std::string(to_string(*color)) : std::string("insufficient_data");
}

json to_json(const SourceAlert& alert) {
  json out{{"source_id", alert.source_id},
           {"n_comments", alert.n_comments},
           {"sexist_count", alert.sexist_count},
           {"sexist_proportion", alert.sexist_proportion},
           {"color", alert.status()}};
  if (alert.boundary) out["boundary"] = true;
  return out;
}

SourceAlert source_alert_from_json(const json& record) {
  SourceAlert a;
  a.source_id = require_string(record, "source_id");
  a.n_comments = record.at("n_comments").get<std::size_t>();
  a.sexist_count = record.value("sexist_count", std::size_t{0});
  a.sexist_proportion = require_number(record, "sexist_proportion");
  a.color = parse_color(require_string(record, "color"));
  a.boundary = record.value("boundary", false);
  return a;
}

SourcePrediction source_prediction_from_json(const json& record) {
  SourcePrediction p;
  p.source_id = require_string(record, "source_id");
  if (auto it = record.find("comment_id"); it != record.end() && it->is_string()) {
    p.comment_id = it->get<std::string>();
  }
  p.label = require_label(record, "label");
  if (auto it = record.find("score"); it != record.end() && it->is_number()) {
    p.score = it->get<double>();
  }
  return p;
}

SourceAlert aggregate_source(std::string_view source_id,
                             std::span<const SourcePrediction> predictions,
                             const AlertThresholds& thresholds) {
  thresholds.validate();
  SourceAlert alert;
  alert.source_id = std::string(source_id);
  for (const auto& p : predictions) {
    if (p.source_id != source_id) {
      fail(ErrorKind::kInvalidArgument, "prediction for comment \"" + p.comment_id +
                                            "\" belongs to source \"" + p.source_id +
                                            "\", not \"" + std::string(source_id) + "\"");
    }
    if (p.label == Label::kSexist) ++alert.sexist_count;
  }
  alert.n_comments = predictions.size();
  if (alert.n_comments > 0) {
    alert.sexist_proportion =
        static_cast<double>(alert.sexist_count) / static_cast<double>(alert.n_comments);
  }
  if (alert.n_comments >= thresholds.min_comments) {
    alert.color = colorize(alert.sexist_proportion, thresholds);
    alert.boundary = on_boundary(alert.sexist_proportion, thresholds);
  }
  return alert;
}

std::vector<SourceAlert> aggregate_sources(std::span<const SourcePrediction> predictions,
                                           const AlertThresholds& thresholds) {
  std::map<std::string, std::vector<SourcePrediction>> grouped;
  for (const auto& p : predictions) grouped[p.source_id].push_back(p);
  std::vector<SourceAlert> out;
  for (const auto& [id, group] : grouped) {
    out.push_back(aggregate_source(id, group, thresholds));
  }
  return out;
}

ColorAgreement color_agreement(const std::map<std::string, Color>& manual,
                               const std::map<std::string, Color>& predicted) {
  if (manual.empty()) {
    fail(ErrorKind::kInvalidArgument, "no sources to compare");
  }
  if (manual.size() != predicted.size()) {
    fail(ErrorKind::kInvalidArgument, "manual and predicted colorings cover different sources");
  }
  ColorAgreement out;
  for (const auto& [id, m] : manual) {
    auto it = predicted.find(id);
    if (it == predicted.end()) {
      fail(ErrorKind::kInvalidArgument, "source \"" + id + "\" has no predicted color");
    }
    ++out.total;
    if (it->second == m) {
      ++out.matches;
      continue;
    }
    out.mismatches.push_back({id, m, it->second});
    const bool severe = (m == Color::kGreen && it->second == Color::kRed) ||
                        (m == Color::kRed && it->second == Color::kGreen);
    if (severe) out.severe_mismatches.push_back({id, m, it->second});
  }
  out.fraction = static_cast<double>(out.matches) / static_cast<double>(out.total);
  return out;
}

json to_json(const ColorAgreement& a) {
  auto list = [](const std::vector<ColorMismatch>& items) {
    json out = json::array();
    for (const auto& m : items) {
      out.push_back({{"source_id", m.source_id},
                     {"manual", to_string(m.manual)},
                     {"predicted", to_string(m.predicted)}});
    }
    return out;
  };
  return {{"fraction", a.fraction},
          {"matches", a.matches},
          {"total", a.total},
          {"mismatches", list(a.mismatches)},
          {"severe_mismatches", list(a.severe_mismatches)}};
}

namespace {

std::string paint(const SourceAlert& a, bool ansi) {
  std::string name = a.status();
  name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
  if (!ansi || !a.color) return name;
  const char* code = *a.color == Color::kRed ? "\033[31m"
                     : *a.color == Color::kYellow ? "\033[33m"
                                                  : "\033[32m";
  return std::string(code) + name + "\033[0m";
}

std::string padded_color(const SourceAlert& a, bool ansi, int width) {
  const std::string plain = a.status();
  std::string out = paint(a, ansi);
  if (static_cast<int>(plain.size()) < width) out += std::string(width - plain.size(), ' ');
  return out;
}

}  // namespace

std::string render_alert_table(std::span<const AlertRow> rows, bool ansi_colors,
                               const ColorAgreement* agreement) {
  bool has_manual = false;
  for (const auto& r : rows) has_manual = has_manual || r.manual.has_value();

  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << std::left << std::setw(12) << "Source";
  if (has_manual) out << std::setw(10) << "Manual %" << std::setw(19) << "Manual color";
  out << std::setw(10) << "Pred. %" << std::setw(19) << "Pred. color" << "Comments" << "\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(12) << r.source_id;
    if (has_manual) {
      if (r.manual) {
        out << std::setw(10) << r.manual->sexist_proportion * 100.0
            << padded_color(*r.manual, ansi_colors, 19);
      } else {
        out << std::setw(10) << "-" << std::setw(19) << "-";
      }
    }
    out << std::setw(10) << r.predicted.sexist_proportion * 100.0
        << padded_color(r.predicted, ansi_colors, 19) << r.predicted.n_comments;
    if (r.predicted.boundary) out << "  (on threshold)";
    out << "\n";
  }
  if (agreement != nullptr) {
    out << std::setprecision(1) << "Color agreement: " << agreement->fraction * 100.0
        << "% (" << agreement->matches << "/" << agreement->total << ")";
    if (!agreement->mismatches.empty()) {
      out << "; mismatches:";
      for (const auto& m : agreement->mismatches) {
        out << " " << m.source_id << " " << to_string(m.manual) << "->"
            << to_string(m.predicted);
      }
    }
    out << "; severe: " << agreement->severe_mismatches.size() << "\n";
  }
  return out.str();
}

}  // namespace sexism_alert
