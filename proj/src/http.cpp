#include "sexism_alert/http.hpp"

#include <functional>

namespace sexism_alert {

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kParse:
      return 400;
    case ErrorKind::kUnauthenticated:
      return 401;
    case ErrorKind::kNotFound:
      return 404;
    case ErrorKind::kConflict:
    case ErrorKind::kAlreadyExists:
      return 409;
    case ErrorKind::kUnavailable:
      return 503;
    case ErrorKind::kIo:
      return 500;
  }
  return 500;
}

namespace {

using Handler = std::function<json(const httplib::Request&, httplib::Response&)>;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

// Wraps a handler so library errors become JSON error bodies.
httplib::Server::Handler guarded(Handler handler) {
  return [handler = std::move(handler)](const httplib::Request& req, httplib::Response& res) {
    try {
      res.status = 200;
      json body = handler(req, res);
      send_json(res, res.status, body);
    } catch (const Error& e) {
      send_json(res, http_status(e.kind()),
                {{"error", to_string(e.kind())}, {"message", e.what()}});
    } catch (const json::exception& e) {
      send_json(res, 400, {{"error", "parse"}, {"message", e.what()}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", "internal"}, {"message", e.what()}});
    }
  };
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    json body = json::parse(req.body);
    if (!body.is_object()) fail(ErrorKind::kParse, "request body must be a JSON object");
    return body;
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kParse, std::string("malformed JSON body: ") + e.what());
  }
}

std::string bearer_token(const httplib::Request& req) {
  const std::string header = req.get_header_value("Authorization");
  constexpr std::string_view kPrefix = "Bearer ";
  if (header.size() <= kPrefix.size() || header.compare(0, kPrefix.size(), kPrefix) != 0) {
    fail(ErrorKind::kUnauthenticated, "missing bearer token");
  }
  return header.substr(kPrefix.size());
}

std::optional<AlertThresholds> threshold_override(const httplib::Request& req,
                                                  const AlertThresholds& base) {
  if (!req.has_param("red") && !req.has_param("yellow") && !req.has_param("min")) {
    return std::nullopt;
  }
  std::string spec;
  for (const char* key : {"red", "yellow", "min"}) {
    if (!req.has_param(key)) continue;
    if (!spec.empty()) spec += ",";
    spec += std::string(key) + "=" + req.get_param_value(key);
  }
  return parse_thresholds(spec, base);
}

json comment_view(const Comment& c, const Service& service) {
  json out{{"id", c.id}, {"text", c.text}};
  if (service.config().show_source_context) out["source_id"] = c.source_id;
  return out;
}

}  // namespace

void register_routes(httplib::Server& server, Service& service) {
  server.Post("/classify", guarded([&](const httplib::Request& req, httplib::Response&) {
    const json body = parse_body(req);
    const Prediction p = service.classify(require_string(body, "text"));
    return json{{"label", to_string(p.label)}, {"score", p.score}, {"truncated", p.truncated}};
  }));

  server.Post("/comments:bulk", guarded([&](const httplib::Request& req, httplib::Response&) {
    const json body = parse_body(req);
    const std::string default_source = body.value("source_id", std::string());
    std::map<std::string, std::vector<CommentRecord>> grouped;
    std::vector<std::string> order;
    for (const auto& record : body.at("records")) {
      auto [source_id, parsed] = comment_record_from_json(record);
      if (source_id.empty()) source_id = default_source;
      if (source_id.empty()) fail(ErrorKind::kInvalidArgument, "record without source_id");
      if (!grouped.contains(source_id)) order.push_back(source_id);
      grouped[source_id].push_back(std::move(parsed));
    }
    IngestReport total;
    for (const auto& id : order) total += service.ingest(id, grouped[id]);
    return to_json(total);
  }));

  server.Get("/sources", guarded([&](const httplib::Request&, httplib::Response&) {
    json out = json::array();
    for (const auto& s : service.sources()) {
      json item = to_json(s.source);
      item["n_comments"] = s.n_comments;
      item["volume"] = to_string(s.volume);
      out.push_back(std::move(item));
    }
    return out;
  }));

  server.Get(R"(/sources/([^/]+)/alert)",
             guarded([&](const httplib::Request& req, httplib::Response&) {
               const auto override = threshold_override(req, service.config().thresholds);
               return to_json(service.source_alert(req.matches[1].str(), override));
             }));

  server.Get("/alerts", guarded([&](const httplib::Request& req, httplib::Response&) {
    const auto override = threshold_override(req, service.config().thresholds);
    json alerts = json::array();
    for (const auto& a : service.alerts(override)) alerts.push_back(to_json(a));
    return json{{"thresholds", to_json(override.value_or(service.config().thresholds))},
                {"alerts", alerts}};
  }));

  server.Post("/votes", guarded([&](const httplib::Request& req, httplib::Response&) {
    const std::string annotator = service.authenticate(bearer_token(req));
    const json body = parse_body(req);
    const std::string category_name = require_string(body, "category");
    auto category = parse_category(category_name);
    if (!category) {
      fail(ErrorKind::kInvalidArgument, "unknown category \"" + category_name + "\"");
    }
    const std::string comment_id = require_string(body, "comment_id");
    const VoteAck ack = service.submit_vote(annotator, comment_id, *category,
                                            body.value("reason", std::string()));
    return json{{"comment_id", ack.comment_id},
                {"annotator_id", ack.annotator_id},
                {"replaced", ack.replaced},
                {"votes", ack.votes_for_comment},
                {"label_state", to_json(service.label_state(comment_id))}};
  }));

  server.Get("/annotation/next", guarded([&](const httplib::Request& req, httplib::Response&) {
    const std::string annotator = service.authenticate(bearer_token(req));
    const auto next = service.next_for(annotator);
    return json{{"comment", next ? comment_view(*next, service) : json(nullptr)},
                {"progress",
                 {{"voted", service.voted_count(annotator)},
                  {"total", service.annotation_queue_size()}}},
                {"discard_reasons", std::vector<std::string>(
                                        suggested_discard_reasons().begin(),
                                        suggested_discard_reasons().end())}};
  }));

  server.Get(R"(/comments/([^/]+)/label)",
             guarded([&](const httplib::Request& req, httplib::Response&) {
               return to_json(service.label_state(req.matches[1].str()));
             }));

  server.Post("/jobs/train", guarded([&](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    TrainRequest request;
    if (body.contains("baseline")) request.baseline = body.at("baseline").get<bool>();
    if (body.contains("seed")) request.seed = body.at("seed").get<std::uint64_t>();
    if (body.contains("epochs")) request.epochs = body.at("epochs").get<std::size_t>();
    request.ratio = body.value("ratio", request.ratio);
    res.status = 202;
    return to_json(service.start_training(request));
  }));

  server.Get(R"(/jobs/([^/]+))", guarded([&](const httplib::Request& req, httplib::Response&) {
    return to_json(service.job(req.matches[1].str()));
  }));

  server.Get("/metrics/latest", guarded([&](const httplib::Request&, httplib::Response&) {
    auto metrics = service.latest_metrics();
    if (!metrics) fail(ErrorKind::kNotFound, "no training run has produced metrics yet");
    return *metrics;
  }));
}

}  // namespace sexism_alert
