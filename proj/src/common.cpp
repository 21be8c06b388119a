#include "sexism_alert/common.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace sexism_alert {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kNotFound: return "not_found";
    case ErrorKind::kAlreadyExists: return "already_exists";
    case ErrorKind::kConflict: return "conflict";
    case ErrorKind::kUnauthenticated: return "unauthenticated";
    case ErrorKind::kUnavailable: return "unavailable";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kParse: return "parse";
  }
  return "unknown";
}

void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

namespace {

int parse_digits(std::string_view text, std::size_t pos, std::size_t count) {
  if (pos + count > text.size()) {
    fail(ErrorKind::kParse, "truncated timestamp: " + std::string(text));
  }
  int value = 0;
  auto [ptr, ec] =
      std::from_chars(text.data() + pos, text.data() + pos + count, value);
  if (ec != std::errc() || ptr != text.data() + pos + count) {
    fail(ErrorKind::kParse, "malformed timestamp: " + std::string(text));
  }
  return value;
}

void expect_char(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    fail(ErrorKind::kParse, "malformed timestamp: " + std::string(text));
  }
}

}  // namespace

Timestamp parse_rfc3339(std::string_view text) {
  using namespace std::chrono;
  const int y = parse_digits(text, 0, 4);
  expect_char(text, 4, '-');
  const int mo = parse_digits(text, 5, 2);
  expect_char(text, 7, '-');
  const int d = parse_digits(text, 8, 2);
  if (text.size() <= 10 || (text[10] != 'T' && text[10] != 't' && text[10] != ' ')) {
    fail(ErrorKind::kParse, "malformed timestamp: " + std::string(text));
  }
  const int h = parse_digits(text, 11, 2);
  expect_char(text, 13, ':');
  const int mi = parse_digits(text, 14, 2);
  expect_char(text, 16, ':');
  const int s = parse_digits(text, 17, 2);

  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) {
    fail(ErrorKind::kParse, "out-of-range timestamp: " + std::string(text));
  }

  std::size_t pos = 19;
  milliseconds frac{0};
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    int scale = 100;
    int ms = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      ms += (text[pos] - '0') * scale;
      scale /= 10;
      ++pos;
    }
    if (pos == start) {
      fail(ErrorKind::kParse, "malformed fraction: " + std::string(text));
    }
    frac = milliseconds{ms};
  }

  minutes offset{0};
  if (pos < text.size() && (text[pos] == 'Z' || text[pos] == 'z')) {
    ++pos;
  } else if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
    const int sign = text[pos] == '+' ? 1 : -1;
    const int oh = parse_digits(text, pos + 1, 2);
    expect_char(text, pos + 3, ':');
    const int om = parse_digits(text, pos + 4, 2);
    offset = minutes{sign * (oh * 60 + om)};
    pos += 6;
  } else {
    fail(ErrorKind::kParse, "timestamp lacks a UTC offset: " + std::string(text));
  }
  if (pos != text.size()) {
    fail(ErrorKind::kParse, "trailing characters in timestamp: " + std::string(text));
  }

  const auto local = sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} + frac;
  return time_point_cast<milliseconds>(local - offset);
}

std::string format_rfc3339(Timestamp ts) {
  using namespace std::chrono;
  const auto day_point = floor<days>(ts);
  const year_month_day ymd{day_point};
  const hh_mm_ss tod{ts - day_point};
  char buf[40];
  const auto ms = tod.subseconds().count();
  if (ms != 0) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ld.%03ldZ",
                  static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()),
                  static_cast<long>(tod.hours().count()),
                  static_cast<long>(tod.minutes().count()),
                  static_cast<long>(tod.seconds().count()),
                  static_cast<long>(ms));
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ",
                  static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()),
                  static_cast<long>(tod.hours().count()),
                  static_cast<long>(tod.minutes().count()),
                  static_cast<long>(tod.seconds().count()));
  }
  return buf;
}

Timestamp now_utc() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(
      std::chrono::system_clock::now());
}

void read_jsonl(const std::filesystem::path& path,
                const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) {
    fail(ErrorKind::kNotFound, "cannot open " + path.string());
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ErrorKind::kParse, path.string() + ":" + std::to_string(line_no) +
                                  ": malformed JSON: " + e.what());
    }
    fn(record, line_no);
  }
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::vector<json> out;
  read_jsonl(path, [&](const json& record, std::size_t) { out.push_back(record); });
  return out;
}

void write_jsonl(const std::filesystem::path& path,
                 const std::vector<json>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    fail(ErrorKind::kIo, "cannot write " + path.string());
  }
  for (const auto& record : records) {
    out << record.dump() << '\n';
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    fail(ErrorKind::kNotFound, "cannot open " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kParse, path.string() + ": malformed JSON: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    fail(ErrorKind::kIo, "cannot write " + path.string());
  }
  out << doc.dump(2) << '\n';
}

std::string require_string(const json& record, const char* field) {
  auto it = record.find(field);
  if (it == record.end() || !it->is_string()) {
    fail(ErrorKind::kParse, std::string("missing or non-string field \"") +
                                field + "\"");
  }
  return it->get<std::string>();
}

double require_number(const json& record, const char* field) {
  auto it = record.find(field);
  if (it == record.end() || !it->is_number()) {
    fail(ErrorKind::kParse, std::string("missing or non-numeric field \"") +
                                field + "\"");
  }
  return it->get<double>();
}

}  // namespace sexism_alert
