#include "sexism_alert/store.hpp"

namespace sexism_alert {

namespace fs = std::filesystem;

AppendLog::AppendLog(fs::path path) : path_(std::move(path)) {}

void AppendLog::append(const json& record) {
  std::lock_guard lock(mutex_);
  if (!out_.is_open()) {
    out_.open(path_, std::ios::app);
    if (!out_) fail(ErrorKind::kIo, "cannot append to " + path_.string());
  }
  out_ << record.dump() << '\n';
  out_.flush();
  if (!out_) fail(ErrorKind::kIo, "write to " + path_.string() + " failed");
}

std::vector<json> AppendLog::replay() const {
  if (!fs::exists(path_)) return {};
  return read_jsonl(path_);
}

namespace {

fs::path prepare_root(fs::path root) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec || !fs::is_directory(root)) {
    fail(ErrorKind::kIo, "data directory " + root.string() + " is not usable");
  }
  const fs::path probe = root / ".write-probe";
  {
    std::ofstream out(probe);
    if (!out) fail(ErrorKind::kIo, "data directory " + root.string() + " is not writable");
  }
  fs::remove(probe);
  fs::create_directories(root / "models");
  return root;
}

}  // namespace

DataDirectory::DataDirectory(fs::path root)
    : root_(prepare_root(std::move(root))),
      sources_(root_ / "sources.jsonl"),
      comments_(root_ / "comments.jsonl"),
      votes_(root_ / "votes.jsonl"),
      labels_(root_ / "labels.jsonl"),
      jobs_(root_ / "jobs.jsonl") {}

}  // namespace sexism_alert
