// sexism-alert: command-line front end over the library and the HTTP service.

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sexism_alert/alerting.hpp"
#include "sexism_alert/annotation.hpp"
#include "sexism_alert/classifier.hpp"
#include "sexism_alert/corpus.hpp"
#include "sexism_alert/evaluation.hpp"
#include "sexism_alert/http.hpp"
#include "sexism_alert/service.hpp"

namespace fs = std::filesystem;
using namespace sexism_alert;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::string data_dir;
  std::string model;
  std::string thresholds;
  std::optional<std::uint64_t> seed;
  bool baseline = false;
};

ServiceConfig resolve_config(const GlobalOptions& g) {
  ServiceConfig config;
  if (!g.config_path.empty()) config = service_config_from_json(read_json_file(g.config_path));
  if (!g.data_dir.empty()) config.data_dir = g.data_dir;
  if (!g.model.empty()) config.model = g.model;
  if (!g.thresholds.empty()) config.thresholds = parse_thresholds(g.thresholds, config.thresholds);
  if (g.seed) config.classifier.seed = *g.seed;
  if (g.baseline) config.classifier.backend = Backend::kBaseline;
  config.validate();
  return config;
}

void print_json(const json& doc) { std::cout << doc.dump(2) << '\n'; }

// Corpus from explicit files, or from the data directory's logs.
Corpus load_corpus(const std::string& sources, const std::string& comments,
                   const ServiceConfig& config) {
  const fs::path source_file =
      sources.empty() ? config.data_dir / "sources.jsonl" : fs::path(sources);
  const fs::path comment_file =
      comments.empty() ? config.data_dir / "comments.jsonl" : fs::path(comments);
  Corpus corpus;
  if (!fs::exists(source_file)) fail(ErrorKind::kNotFound, "no source registry at " + source_file.string());
  for (auto& s : load_source_registry(source_file)) corpus.add_source(std::move(s));
  if (fs::exists(comment_file)) ingest_comment_file(corpus, comment_file);
  return corpus;
}

std::vector<FinalLabel> load_labels(const std::string& votes, const std::string& labels,
                                    const ServiceConfig& config) {
  std::vector<FinalLabel> out;
  if (!labels.empty()) {
    for (const auto& record : read_jsonl(labels)) out.push_back(final_label_from_json(record));
    return out;
  }
  const fs::path vote_file = votes.empty() ? config.data_dir / "votes.jsonl" : fs::path(votes);
  const auto all = load_votes(vote_file);
  return book_from_votes(all, config.panel_size).final_labels();
}

fs::path resolve_model_dir(const ServiceConfig& config) {
  if (!config.model.empty()) return config.model;
  const fs::path active = config.data_dir / "active_model.json";
  if (fs::exists(active)) return read_json_file(active).at("path").get<std::string>();
  fail(ErrorKind::kUnavailable, "no model given and the data directory has no active model");
}

fs::path next_free_dir(const fs::path& parent, const std::string& stem) {
  for (int i = 1;; ++i) {
    fs::path candidate = parent / (stem + "-" + std::to_string(i));
    if (!fs::exists(candidate)) return candidate;
  }
}

std::string render_confusion(const NormalizedConfusion& c) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%-12s %10s %10s\n%-12s %10.2f %10.2f\n%-12s %10.2f %10.2f\n", "true\\pred",
                "sexist", "not_sexist", "sexist", c.matrix(0, 0), c.matrix(0, 1),
                "not_sexist", c.matrix(1, 0), c.matrix(1, 1));
  return buf;
}

// Key for joining gold and predicted records.
std::string record_key(const json& record) {
  if (auto it = record.find("comment_id"); it != record.end() && it->is_string()) {
    return it->get<std::string>();
  }
  return require_string(record, "id");
}

// ---------------------------------------------------------------- commands

int cmd_ingest(const GlobalOptions& g, const std::string& sources, const std::string& comments,
               const std::string& fixtures) {
  Service service(resolve_config(g));
  std::map<std::string, bool> known;
  for (const auto& s : service.sources()) known[s.source.id] = true;
  std::vector<ContentSource> registry;
  if (!sources.empty()) registry = load_source_registry(sources);
  for (const auto& s : registry) {
    if (!known.contains(s.id)) service.register_source(s);
  }

  IngestReport report;
  if (!comments.empty()) {
    std::map<std::string, std::vector<CommentRecord>> grouped;
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::size_t>> file_index;
    std::size_t line = 0;
    for (const auto& record : read_jsonl(comments)) {
      auto [source_id, parsed] = comment_record_from_json(record);
      if (!grouped.contains(source_id)) order.push_back(source_id);
      grouped[source_id].push_back(std::move(parsed));
      file_index[source_id].push_back(line++);
    }
    for (const auto& id : order) {
      IngestReport part = service.ingest(id, grouped[id]);
      for (auto& r : part.rejected) r.index = file_index[id][r.index];
      report += part;
    }
  }
  if (!fixtures.empty()) {
    FixtureFetcher fetcher{fs::path(fixtures)};
    for (const auto& s : registry) report += service.ingest(s.id, fetcher.fetch(s));
  }

  json volumes = json::object();
  for (const auto& s : service.sources()) volumes[s.source.id] = to_string(s.volume);
  json out = to_json(report);
  out["volume"] = volumes;
  print_json(out);
  return 0;
}

int cmd_sample(const GlobalOptions& g, const std::string& sources, const std::string& comments,
               double fraction, double tolerance, const std::string& out_path, bool write_queue) {
  const ServiceConfig config = resolve_config(g);
  const Corpus corpus = load_corpus(sources, comments, config);
  SamplingTargets targets;
  targets.sample_fraction = fraction;
  targets.tolerance_pp = tolerance;
  const SampleResult result =
      select_balanced_sample(corpus, targets, config.classifier.seed);

  fs::path target = out_path;
  if (target.empty() && write_queue) target = config.data_dir / "annotation_queue.jsonl";
  if (!target.empty()) {
    std::vector<json> rows;
    for (const auto& c : result.comments) rows.push_back({{"comment_id", c.id}});
    write_jsonl(target, rows);
  }
  json out = to_json(result);
  out.erase("comments");
  out["selected"] = result.comments.size();
  if (!target.empty()) out["queue"] = target.string();
  print_json(out);
  return result.within_tolerance ? 0 : 3;
}

int cmd_export(const GlobalOptions& g, const std::string& sources, const std::string& comments,
               const std::string& votes, const std::string& labels, const std::string& out_path) {
  const ServiceConfig config = resolve_config(g);
  const Corpus corpus = load_corpus(sources, comments, config);
  const auto finals = load_labels(votes, labels, config);
  const auto examples = export_training_set(finals, corpus);
  save_training_set(out_path, examples);
  const auto counts = class_counts(examples);
  print_json({{"resolved", finals.size()},
              {"exported", examples.size()},
              {"sexist", counts.contains(Label::kSexist) ? counts.at(Label::kSexist) : 0},
              {"not_sexist",
               counts.contains(Label::kNotSexist) ? counts.at(Label::kNotSexist) : 0},
              {"out", out_path}});
  return 0;
}

int cmd_train(const GlobalOptions& g, const std::string& data, std::string out_dir,
              double ratio, std::optional<std::size_t> epochs, bool no_weights, bool as_json) {
  const ServiceConfig config = resolve_config(g);
  ClassifierConfig classifier = config.classifier;
  if (epochs) classifier.epochs = *epochs;
  if (no_weights) classifier.class_weight_mode = ClassWeightMode::kNone;
  classifier.validate();

  const auto examples = load_training_set(data);
  const DataSplit split = stratified_split(examples, ratio, classifier.seed);
  const ModelArtifact model = fine_tune(split, classifier);

  fs::path target = out_dir.empty() ? next_free_dir(config.data_dir / "models", "cli")
                                    : fs::path(out_dir);
  model.save(target);
  const SplitEvaluation train_eval = evaluate_examples(model, split.train);
  const SplitEvaluation test_eval = evaluate_examples(model, split.test);
  if (as_json) {
    print_json({{"artifact", target.string()},
                {"summary", to_json(model.summary())},
                {"train", to_json(train_eval)},
                {"test", to_json(test_eval)}});
  } else {
    std::cout << "artifact: " << target.string() << "\n\ntrain\n"
              << render_metrics_table(train_eval.metrics) << "\ntest\n"
              << render_metrics_table(test_eval.metrics);
  }
  return 0;
}

int cmd_evaluate(const GlobalOptions& g, const std::string& gold_path,
                 const std::string& pred_path, bool as_json) {
  const auto gold_records = read_jsonl(gold_path);
  std::vector<Label> truth;
  std::vector<Label> predicted;
  if (!pred_path.empty()) {
    std::map<std::string, Label, std::less<>> by_id;
    for (const auto& record : read_jsonl(pred_path)) {
      by_id[record_key(record)] = require_label(record, "label");
    }
    for (const auto& record : gold_records) {
      const std::string key = record_key(record);
      auto it = by_id.find(key);
      if (it == by_id.end()) fail(ErrorKind::kNotFound, "no prediction for \"" + key + "\"");
      truth.push_back(require_label(record, "label"));
      predicted.push_back(it->second);
    }
  } else {
    const ModelArtifact model = ModelArtifact::load(resolve_model_dir(resolve_config(g)));
    for (const auto& record : gold_records) {
      truth.push_back(require_label(record, "label"));
      predicted.push_back(predict(model, require_string(record, "text")).label);
    }
  }
  const Metrics metrics = compute_metrics(count_confusion(predicted, truth));
  const NormalizedConfusion confusion = normalized_confusion_matrix(predicted, truth);
  if (as_json) {
    print_json({{"metrics", to_json(metrics)}, {"confusion", to_json(confusion)}});
  } else {
    std::cout << render_metrics_table(metrics) << '\n' << render_confusion(confusion);
  }
  return 0;
}

int cmd_classify(const GlobalOptions& g, const std::string& text, const std::string& input,
                 const std::string& out_path) {
  const ModelArtifact model = ModelArtifact::load(resolve_model_dir(resolve_config(g)));
  if (input.empty()) {
    const Prediction p = predict(model, text);
    std::cout << json{{"label", to_string(p.label)},
                      {"score", p.score},
                      {"truncated", p.truncated}}
                     .dump()
              << '\n';
    return 0;
  }
  const auto records = read_jsonl(input);
  std::vector<std::string> texts;
  for (const auto& r : records) texts.push_back(require_string(r, "text"));
  const auto items = predict_batch(model, texts);
  std::vector<json> rows;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    json row;
    const json& record = records[i];
    row["comment_id"] = record_key(record);
    if (auto it = record.find("source_id"); it != record.end()) row["source_id"] = *it;
    if (items[i].ok()) {
      row["label"] = to_string(items[i].prediction->label);
      row["score"] = items[i].prediction->score;
      row["truncated"] = items[i].prediction->truncated;
    } else {
      row["error"] = items[i].error;
      ++failed;
    }
    rows.push_back(std::move(row));
  }
  if (out_path.empty()) {
    for (const auto& row : rows) std::cout << row.dump() << '\n';
  } else {
    write_jsonl(out_path, rows);
    print_json({{"classified", rows.size() - failed}, {"failed", failed}, {"out", out_path}});
  }
  return failed == 0 ? 0 : 3;
}

// Accepts per-comment label records or per-source alert records.
std::map<std::string, SourceAlert> read_alerts(const fs::path& path,
                                               const std::vector<ContentSource>& registry,
                                               const AlertThresholds& thresholds) {
  const auto records = read_jsonl(path);
  std::map<std::string, SourceAlert> out;
  if (!records.empty() && records.front().contains("sexist_proportion")) {
    for (const auto& r : records) {
      SourceAlert a = source_alert_from_json(r);
      a.color = a.n_comments >= thresholds.min_comments
                    ? std::optional<Color>(colorize(a.sexist_proportion, thresholds))
                    : std::nullopt;
      a.boundary = on_boundary(a.sexist_proportion, thresholds);
      out[a.source_id] = std::move(a);
    }
  } else {
    std::vector<SourcePrediction> predictions;
    for (const auto& r : records) predictions.push_back(source_prediction_from_json(r));
    for (auto& a : aggregate_sources(predictions, thresholds)) out[a.source_id] = std::move(a);
  }
  for (const auto& s : registry) {
    if (!out.contains(s.id)) out[s.id] = aggregate_source(s.id, {}, thresholds);
  }
  return out;
}

int cmd_alert(const GlobalOptions& g, const std::string& sources, const std::string& preds,
              const std::string& gold, const std::string& report_path, bool as_json,
              bool no_color) {
  const ServiceConfig config = resolve_config(g);
  std::vector<ContentSource> registry;
  if (!sources.empty()) registry = load_source_registry(sources);
  const auto predicted = read_alerts(preds, registry, config.thresholds);
  std::optional<std::map<std::string, SourceAlert>> manual;
  if (!gold.empty()) manual = read_alerts(gold, registry, config.thresholds);

  std::vector<AlertRow> rows;
  std::map<std::string, Color> manual_colors;
  std::map<std::string, Color> predicted_colors;
  for (const auto& [id, alert] : predicted) {
    AlertRow row{id, std::nullopt, alert};
    if (manual) {
      auto it = manual->find(id);
      if (it != manual->end()) {
        row.manual = it->second;
        if (it->second.color && alert.color) {
          manual_colors[id] = *it->second.color;
          predicted_colors[id] = *alert.color;
        }
      }
    }
    rows.push_back(std::move(row));
  }
  std::optional<ColorAgreement> agreement;
  if (!manual_colors.empty()) agreement = color_agreement(manual_colors, predicted_colors);

  if (!report_path.empty()) {
    std::vector<json> lines;
    for (const auto& row : rows) lines.push_back(to_json(row.predicted));
    write_jsonl(report_path, lines);
  }
  if (as_json) {
    json alerts = json::array();
    for (const auto& row : rows) alerts.push_back(to_json(row.predicted));
    json out{{"thresholds", to_json(config.thresholds)}, {"alerts", alerts}};
    if (agreement) out["agreement"] = to_json(*agreement);
    print_json(out);
  } else {
    const bool ansi = !no_color && isatty(STDOUT_FILENO);
    std::cout << render_alert_table(rows, ansi, agreement ? &*agreement : nullptr);
  }
  return 0;
}

int cmd_report(const GlobalOptions& g, const std::string& sources, const std::string& comments,
               const std::string& votes, const std::string& labels, bool as_json) {
  const ServiceConfig config = resolve_config(g);
  const Corpus corpus = load_corpus(sources, comments, config);
  const CorpusStats stats = corpus_stats(corpus);
  std::optional<LabelingReport> labeling;
  const bool have_votes = !votes.empty() || !labels.empty() ||
                          fs::exists(config.data_dir / "votes.jsonl");
  if (have_votes) labeling = labeling_report(load_labels(votes, labels, config), corpus);
  if (as_json) {
    json out{{"corpus", to_json(stats)}};
    if (labeling) out["labeling"] = to_json(*labeling);
    print_json(out);
  } else {
    std::cout << render_stats_table(stats);
    if (labeling) std::cout << '\n' << render_labeling_table(*labeling);
  }
  return 0;
}

int cmd_serve(const GlobalOptions& g) {
  const ServiceConfig config = resolve_config(g);
  Service service(config);
  httplib::Server server;
  register_routes(server, service);
  if (!server.bind_to_port(config.listen_host, config.listen_port)) {
    fail(ErrorKind::kUnavailable, "cannot listen on " + config.listen_host + ":" +
                                      std::to_string(config.listen_port));
  }
  std::cerr << "listening on " << config.listen_host << ':' << config.listen_port << std::endl;
  server.listen_after_bind();
  return 0;
}

void print_error(std::string_view kind, std::string_view message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traffic-light sexism alerts over social-media comments"};
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--config", g.config_path, "Service configuration (JSON)");
  app.add_option("--data-dir", g.data_dir, "Data directory");
  app.add_option("--model", g.model, "Model artifact directory");
  app.add_option("--thresholds", g.thresholds, "red=0.05,yellow=0.025,min=100");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_flag("--baseline", g.baseline, "Use the baseline classifier");

  std::string sources, comments, fixtures, votes, labels, out, data, text, input, gold, preds,
      report;
  double fraction = 0.05, tolerance = 5.0, ratio = 0.8;
  std::optional<std::size_t> epochs;
  bool as_json = false, write_queue = false, no_weights = false, no_color = false;

  auto* ingest = app.add_subcommand("ingest", "Register sources and store comments");
  ingest->add_option("--sources", sources, "Source registry (JSON Lines)");
  ingest->add_option("--comments", comments, "Comment records (JSON Lines)");
  ingest->add_option("--fixtures", fixtures, "Directory of <source>.jsonl comment fixtures");

  auto* sample = app.add_subcommand("sample", "Draw a taxonomy-balanced annotation sample");
  sample->add_option("--sources", sources);
  sample->add_option("--comments", comments);
  sample->add_option("--fraction", fraction);
  sample->add_option("--tolerance", tolerance, "Allowed deviation in percentage points");
  sample->add_option("--out", out, "Write the selected comment ids here");
  sample->add_flag("--write-queue", write_queue,
                   "Write the data directory's annotation queue");

  auto* exporter = app.add_subcommand("export-training", "Resolved labels to a training set");
  exporter->add_option("--sources", sources);
  exporter->add_option("--comments", comments);
  exporter->add_option("--votes", votes, "Vote records (JSON Lines)");
  exporter->add_option("--labels", labels, "Final label records (JSON Lines)");
  exporter->add_option("--out", out)->required();

  auto* train = app.add_subcommand("train", "Fine-tune a classifier");
  train->add_option("--data", data, "Training set (JSON Lines)")->required();
  train->add_option("--out", out, "Artifact directory");
  train->add_option("--ratio", ratio, "Train share of the stratified split");
  train->add_option("--epochs", epochs);
  train->add_flag("--no-class-weights", no_weights);
  train->add_flag("--json", as_json);

  auto* evaluate = app.add_subcommand("evaluate", "Precision, recall and F1 report");
  evaluate->add_option("--gold", gold, "Gold labels (JSON Lines)")->required();
  evaluate->add_option("--pred", preds, "Predictions (JSON Lines); otherwise --model is run");
  evaluate->add_flag("--json", as_json);

  auto* classify = app.add_subcommand("classify", "Classify one text or a file");
  auto* text_opt = classify->add_option("--text", text);
  auto* input_opt = classify->add_option("--input", input, "Records with id and text");
  text_opt->excludes(input_opt);
  classify->add_option("--out", out);

  auto* alert = app.add_subcommand("alert", "Per-source traffic-light report");
  alert->add_option("--sources", sources, "Source registry (JSON Lines)");
  alert->add_option("--predictions", preds, "Predictions or alert records")->required();
  alert->add_option("--gold", gold, "Manual labels or alert records");
  alert->add_option("--report", report, "Write the alert report (JSON Lines)");
  alert->add_flag("--json", as_json);
  alert->add_flag("--no-color", no_color);

  auto* rep = app.add_subcommand("report", "Corpus and labeling statistics");
  rep->add_option("--sources", sources);
  rep->add_option("--comments", comments);
  rep->add_option("--votes", votes);
  rep->add_option("--labels", labels);
  rep->add_flag("--json", as_json);

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (*ingest) return cmd_ingest(g, sources, comments, fixtures);
    if (*sample) return cmd_sample(g, sources, comments, fraction, tolerance, out, write_queue);
    if (*exporter) return cmd_export(g, sources, comments, votes, labels, out);
    if (*train) return cmd_train(g, data, out, ratio, epochs, no_weights, as_json);
    if (*evaluate) return cmd_evaluate(g, gold, preds, as_json);
    if (*classify) {
      if (text_opt->count() == 0 && input_opt->count() == 0) {
        print_error("usage", "classify needs --text or --input");
        return 2;
      }
      return cmd_classify(g, text, input, out);
    }
    if (*alert) return cmd_alert(g, sources, preds, gold, report, as_json, no_color);
    if (*rep) return cmd_report(g, sources, comments, votes, labels, as_json);
    if (*serve) return cmd_serve(g);
  } catch (const Error& e) {
    print_error(to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 2;
}
