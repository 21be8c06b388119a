#include <doctest.h>

#include <sys/wait.h>

#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "fixtures.hpp"
#include "sexism_alert/annotation.hpp"
#include "sexism_alert/http.hpp"

using namespace sexism_alert;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run(const fixtures::TempDir& dir, const std::vector<std::string>& args) {
  std::string cmd = quote(SEXISM_ALERT_CLI);
  for (const auto& a : args) cmd += " " + quote(a);
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  cmd += " >" + quote(out.string()) + " 2>" + quote(err.string());
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

void write_jsonl_rows(const fs::path& path, const std::vector<json>& rows) { write_jsonl(path, rows); }

void write_registry(const fs::path& path) {
  std::vector<json> rows;
  for (const auto& row : fixtures::kReferenceSources) rows.push_back(to_json(fixtures::reference_source(row.id)));
  write_jsonl_rows(path, rows);
}

void write_predictions(const fs::path& path, bool manual) {
  std::vector<json> rows;
  for (const auto& p : fixtures::reference_predictions(manual)) {
    rows.push_back({{"source_id", p.source_id},
                    {"comment_id", p.comment_id},
                    {"label", to_string(p.label)},
                    {"score", p.score}});
  }
  write_jsonl_rows(path, rows);
}

void write_training(const fs::path& path, std::size_t n, std::uint64_t seed) {
  std::vector<json> rows;
  for (const auto& e : fixtures::skewed_corpus(n, 0.3, seed)) {
    rows.push_back({{"id", e.id}, {"text", e.text}, {"label", to_string(e.label)}});
  }
  write_jsonl_rows(path, rows);
}

}  // namespace

TEST_CASE("alert renders the reference sources") {
  fixtures::TempDir dir;
  write_registry(dir / "registry.jsonl");
  write_predictions(dir / "preds.jsonl", false);
  write_predictions(dir / "gold.jsonl", true);

  Run r = run(dir, {"alert", "--sources", (dir / "registry.jsonl").string(), "--predictions",
                    (dir / "preds.jsonl").string(), "--no-color"});
  CHECK(r.code == 0);
  CHECK(r.out.find("E5") != std::string::npos);
  CHECK(r.out.find("41.18") != std::string::npos);
  CHECK(r.out.find("Manual") == std::string::npos);

  r = run(dir, {"alert", "--sources", (dir / "registry.jsonl").string(), "--predictions",
                (dir / "preds.jsonl").string(), "--gold", (dir / "gold.jsonl").string(), "--json",
                "--report", (dir / "report.jsonl").string()});
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  CHECK(doc["alerts"].size() == 13);
  std::map<std::string, std::string> colors;
  for (const auto& a : doc["alerts"]) colors[a["source_id"]] = a["color"];
  for (const auto& row : fixtures::kReferenceSources) {
    const std::string expected =
        std::string(row.id) == "E3" ? "yellow" : std::string(to_string(row.predicted_color));
    CHECK(colors[row.id] == expected);
  }
  CHECK(doc["agreement"]["matches"] == 10);
  CHECK(doc["agreement"]["severe_mismatches"].empty());
  CHECK(read_jsonl(dir / "report.jsonl").size() == 13);

  // Alert-report records are accepted as input as well.
  r = run(dir, {"alert", "--predictions", (dir / "report.jsonl").string(), "--json"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["alerts"] == doc["alerts"]);

  r = run(dir, {"--thresholds", "red=0.10", "alert", "--predictions",
                (dir / "preds.jsonl").string(), "--json"});
  REQUIRE(r.code == 0);
  const json overridden = json::parse(r.out);
  for (const auto& a : overridden["alerts"]) {
    const double p = a["sexist_proportion"];
    if (p > 0.05 && p <= 0.10) CHECK(a["color"] == "yellow");
  }
}

TEST_CASE("evaluate reports the 0.75 fixture") {
  fixtures::TempDir dir;
  std::vector<json> gold, pred;
  const char* g = "SSSSNNNN";
  const char* p = "SSSNNNNS";
  for (int i = 0; i < 8; ++i) {
    gold.push_back({{"id", "c" + std::to_string(i)}, {"label", g[i] == 'S' ? "sexist" : "not_sexist"}});
    pred.push_back({{"comment_id", "c" + std::to_string(i)}, {"label", p[i] == 'S' ? "sexist" : "not_sexist"}});
  }
  write_jsonl_rows(dir / "gold.jsonl", gold);
  write_jsonl_rows(dir / "pred.jsonl", pred);
  Run r = run(dir, {"evaluate", "--gold", (dir / "gold.jsonl").string(), "--pred",
                    (dir / "pred.jsonl").string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("0.75") != std::string::npos);
  CHECK(r.out.find("Global") != std::string::npos);

  r = run(dir, {"evaluate", "--gold", (dir / "gold.jsonl").string(), "--pred",
                (dir / "pred.jsonl").string(), "--json"});
  const json m = json::parse(r.out);
  CHECK(m["metrics"]["global"]["f1"] == 0.75);

  pred.pop_back();
  write_jsonl_rows(dir / "pred.jsonl", pred);
  r = run(dir, {"evaluate", "--gold", (dir / "gold.jsonl").string(), "--pred",
                (dir / "pred.jsonl").string()});
  CHECK(r.code != 0);
}

TEST_CASE("train writes an artifact; classify agrees with HTTP bit for bit") {
  fixtures::TempDir dir;
  write_training(dir / "train.jsonl", 200, 8);
  Run r = run(dir, {"--baseline", "--seed", "7", "train", "--data",
                    (dir / "train.jsonl").string(), "--out", (dir / "model").string(), "--json"});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "model" / "config.json"));
  CHECK(fs::exists(dir / "model" / "training_summary.json"));
  const json trained = json::parse(r.out);
  CHECK(trained["summary"]["train_size"] == 160);
  CHECK(read_json_file(dir / "model" / "config.json")["seed"] == 7);

  ServiceConfig config;
  config.data_dir = dir / "data";
  config.model = dir / "model";
  Service service(config);
  httplib::Server server;
  register_routes(server, service);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);

  for (const std::string text : {"hola guapa", "qué histérica estás", "w1 w2 w3 cocina 😀"}) {
    r = run(dir, {"--model", (dir / "model").string(), "classify", "--text", text});
    REQUIRE(r.code == 0);
    const double cli_score = json::parse(r.out)["score"];
    const auto res = client.Post("/classify", json{{"text", text}}.dump(), "application/json");
    REQUIRE(res);
    const double http_score = json::parse(res->body)["score"];
    CHECK(std::memcmp(&cli_score, &http_score, sizeof(double)) == 0);
  }
  server.stop();
  thread.join();

  r = run(dir, {"--model", (dir / "model").string(), "classify", "--text", ""});
  CHECK(r.code != 0);
  CHECK(json::parse(r.err)["error"] == "invalid_argument");
}

TEST_CASE("errors are one machine-readable line") {
  fixtures::TempDir dir;
  Run r = run(dir, {"alert", "--predictions", (dir / "missing.jsonl").string()});
  CHECK(r.code != 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  const json e = json::parse(r.err);
  CHECK(e.contains("error"));
  CHECK(e.contains("message"));

  r = run(dir, {"frobnicate"});
  CHECK(r.code == 2);
  CHECK(json::parse(r.err)["error"] == "usage");

  r = run(dir, {"--thresholds", "red=0.01,yellow=0.02", "alert", "--predictions", "x"});
  CHECK(r.code != 0);
  CHECK(json::parse(r.err)["error"] == "invalid_argument");

  r = run(dir, {"--data-dir", (dir / "empty").string(), "classify", "--text", "hola"});
  CHECK(r.code != 0);
  CHECK(json::parse(r.err)["error"] == "unavailable");
}

TEST_CASE("ingest, sample, export-training and report over a data directory") {
  fixtures::TempDir dir;
  const fs::path data = dir / "data";
  std::vector<json> registry, comments;
  int n = 0;
  for (int g = 0; g < 2; ++g) {
    for (int c = 0; c < 3; ++c) {
      for (int x = 0; x < 3; ++x) {
        const std::string id = "T" + std::to_string(++n);
        registry.push_back({{"id", id},
                            {"url", "https://example.org/" + id},
                            {"media_kind", "microblog"},
                            {"protagonist_gender", g == 0 ? "male" : "female"},
                            {"protagonist_count", std::array{"individual", "collective", "hybrid"}[c]},
                            {"context", std::array{"professional", "personal", "hybrid"}[x]}});
        for (int i = 0; i < 40; ++i) {
          comments.push_back({{"id", id + "-" + std::to_string(i)},
                              {"source_id", id},
                              {"text", "texto " + std::to_string(i)},
                              {"fetched_at", "2023-01-20T10:00:00Z"}});
        }
      }
    }
  }
  write_jsonl_rows(dir / "registry.jsonl", registry);
  write_jsonl_rows(dir / "comments.jsonl", comments);

  Run r = run(dir, {"--data-dir", data.string(), "ingest", "--sources",
                    (dir / "registry.jsonl").string(), "--comments",
                    (dir / "comments.jsonl").string()});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["ingested"] == 720);
  r = run(dir, {"--data-dir", data.string(), "ingest", "--sources",
                (dir / "registry.jsonl").string(), "--comments", (dir / "comments.jsonl").string()});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["duplicate_ids"].size() == 720);

  r = run(dir, {"--data-dir", data.string(), "--seed", "3", "sample", "--fraction", "0.1",
                "--write-queue"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["selected"] == 72);
  const auto queue = read_jsonl(data / "annotation_queue.jsonl");
  CHECK(queue.size() == 72);

  std::vector<json> votes;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    for (const char* a : {"a1", "a2", "a3", "a4"}) {
      AnnotationVote v{queue[i]["comment_id"], a,
                       i % 9 == 0 ? LabelCategory::kDiscard
                                  : (i % 3 == 0 ? LabelCategory::kYes : LabelCategory::kNo),
                       parse_rfc3339("2023-02-01T00:00:00Z"), {}};
      votes.push_back(to_json(v));
    }
  }
  write_jsonl_rows(dir / "votes.jsonl", votes);
  r = run(dir, {"--data-dir", data.string(), "export-training", "--votes",
                (dir / "votes.jsonl").string(), "--out", (dir / "train.jsonl").string()});
  REQUIRE(r.code == 0);
  const json exported = json::parse(r.out);
  CHECK(exported["resolved"] == 72);
  CHECK(exported["exported"] == 64);
  CHECK(load_training_set(dir / "train.jsonl").size() == 64);

  r = run(dir, {"--data-dir", data.string(), "report", "--votes", (dir / "votes.jsonl").string(),
                "--json"});
  REQUIRE(r.code == 0);
  const json report = json::parse(r.out);
  CHECK(report["corpus"]["total"] == 720);
  CHECK(report["labeling"]["overall"]["total"] == 72);

  r = run(dir, {"--data-dir", data.string(), "report"});
  CHECK(r.code == 0);
  CHECK(r.out.find("microblog") != std::string::npos);
}
