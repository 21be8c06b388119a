#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace sexism_alert {

using json = nlohmann::json;
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

enum class ErrorKind {
  kInvalidArgument,
  kNotFound,
  kAlreadyExists,
  kConflict,
  kUnauthenticated,
  kUnavailable,
  kIo,
  kParse,
};

std::string_view to_string(ErrorKind kind);

// Every failure surfaced by the library is an Error carrying a kind that the
// CLI and HTTP layers map to exit codes / status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

/// Parses an RFC 3339 date-time ("2021-09-10T12:00:00Z",
/// "2021-09-10T12:00:00.250+02:00"). Result is in UTC.
Timestamp parse_rfc3339(std::string_view text);

/// Formats as UTC with a "Z" suffix; milliseconds are printed only when
/// non-zero.
std::string format_rfc3339(Timestamp ts);

Timestamp now_utc();

/// Calls `fn(record, line_number)` for every non-blank line of a JSON Lines
/// file. Line numbers are 1-based. Parse failures raise kParse naming the line.
void read_jsonl(const std::filesystem::path& path,
                const std::function<void(const json&, std::size_t)>& fn);

std::vector<json> read_jsonl(const std::filesystem::path& path);

void write_jsonl(const std::filesystem::path& path,
                 const std::vector<json>& records);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& doc);

// Field accessors that turn missing / mistyped members into kParse errors.
std::string require_string(const json& record, const char* field);
double require_number(const json& record, const char* field);

}  // namespace sexism_alert
