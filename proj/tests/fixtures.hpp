#pragma once

#include <unistd.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sexism_alert/alerting.hpp"
#include "sexism_alert/corpus.hpp"
#include "sexism_alert/labels.hpp"

namespace fixtures {

using namespace sexism_alert;

struct ReferenceRow {
  const char* id;
  double manual_pct;
  Color manual_color;
  double predicted_pct;
  Color predicted_color;  // as printed
};

inline constexpr std::array<ReferenceRow, 13> kReferenceSources{{
    {"E17", 0.00, Color::kGreen, 0.77, Color::kGreen},
    {"E2", 2.97, Color::kYellow, 1.98, Color::kGreen},
    {"E3", 1.06, Color::kGreen, 2.66, Color::kGreen},
    {"E5", 43.38, Color::kRed, 41.18, Color::kRed},
    {"E7", 0.00, Color::kGreen, 1.36, Color::kGreen},
    {"M1", 8.59, Color::kRed, 7.03, Color::kRed},
    {"T10", 6.73, Color::kRed, 4.81, Color::kYellow},
    {"T13", 0.00, Color::kGreen, 0.00, Color::kGreen},
    {"T17", 1.94, Color::kGreen, 0.97, Color::kGreen},
    {"T19", 0.00, Color::kGreen, 0.00, Color::kGreen},
    {"Y5", 21.12, Color::kRed, 19.14, Color::kRed},
    {"Y7", 0.00, Color::kGreen, 1.77, Color::kGreen},
    {"Y9", 0.00, Color::kGreen, 0.00, Color::kGreen},
}};

/// Smallest (sexist, total) with total >= min_total whose percentage rounds
/// to `pct` at two decimals.
inline std::pair<std::size_t, std::size_t> counts_for_percentage(double pct,
                                                                 std::size_t min_total = 100) {
  const long long target = std::llround(pct * 100.0);
  for (std::size_t n = min_total; n <= 5000; ++n) {
    const auto k = static_cast<std::size_t>(std::llround(pct / 100.0 * static_cast<double>(n)));
    for (std::size_t kk = k == 0 ? 0 : k - 1; kk <= k + 1 && kk <= n; ++kk) {
      const double p = 10000.0 * static_cast<double>(kk) / static_cast<double>(n);
      if (std::llround(p) == target) return {kk, n};
    }
  }
  return {0, 0};
}

/// Per-comment predictions whose per-source percentages reproduce one
/// reference column.
inline std::vector<SourcePrediction> reference_predictions(bool manual_column,
                                                        std::size_t min_total = 100) {
  std::vector<SourcePrediction> out;
  for (const auto& row : kReferenceSources) {
    const double pct = manual_column ? row.manual_pct : row.predicted_pct;
    const auto [k, n] = counts_for_percentage(pct, min_total);
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back({row.id, std::string(row.id) + "-c" + std::to_string(i),
                     i < k ? Label::kSexist : Label::kNotSexist, i < k ? 0.9 : 0.1});
    }
  }
  return out;
}

inline ContentSource reference_source(std::string_view id) {
  ContentSource s;
  s.id = std::string(id);
  s.media_kind = *media_kind_for_id(id);
  s.url = "https://example.org/" + s.id;
  return s;
}

/// Noisy corpus with a `positive_share` minority class. Each positive
/// carries every cue word with probability 0.35, each negative with 0.08;
/// the remaining tokens are shared filler.
inline std::vector<TrainingExample> skewed_corpus(std::size_t n, double positive_share,
                                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> filler(0, 59);
  const std::array<const char*, 4> cues{"fregona", "cocina", "histérica", "calladita"};
  std::vector<TrainingExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const bool positive = u(rng) < positive_share;
    std::string text;
    for (const char* cue : cues) {
      if (u(rng) < (positive ? 0.35 : 0.08)) text += std::string(cue) + " ";
    }
    for (int j = 0; j < 6; ++j) text += "w" + std::to_string(filler(rng)) + " ";
    out.push_back({"s" + std::to_string(i), text,
                   positive ? Label::kSexist : Label::kNotSexist});
  }
  return out;
}

/// Examples that can only be fit by memorizing per-example tokens.
inline std::vector<TrainingExample> memorizable_corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<TrainingExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Label label = (rng() & 1U) ? Label::kSexist : Label::kNotSexist;
    out.push_back({"m" + std::to_string(i),
                   "tok" + std::to_string(i) + " extra" + std::to_string(i) + " común",
                   label});
  }
  return out;
}

/// Removes itself on destruction.
class TempDir {
 public:
  TempDir() {
    std::string pattern =
        (std::filesystem::temp_directory_path() / "sexism-alert-test-XXXXXX").string();
    if (mkdtemp(pattern.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
