#pragma once

// Eigen must precede httplib: <resolv.h> defines a `_res` macro.
#include "sexism_alert/service.hpp"

#include <httplib.h>

namespace sexism_alert {

/// HTTP status for an error kind (400, 401, 404, 409, 503, 500).
int http_status(ErrorKind kind);

/// Installs the JSON API on `server`. Every handler decodes the request,
/// calls one Service operation and encodes its result.
///
///   POST /classify                 {"text"} -> {"label","score","truncated"}
///   POST /comments:bulk            {"source_id"?, "records":[...]}
///   GET  /sources
///   GET  /sources/{id}/alert       ?red=&yellow=&min= what-if overrides
///   GET  /alerts                   same overrides
///   POST /votes                    bearer token; {"comment_id","category","reason"?}
///   GET  /annotation/next          bearer token
///   GET  /comments/{id}/label
///   POST /jobs/train               {"baseline"?,"seed"?,"epochs"?,"ratio"?}
///   GET  /jobs/{id}
///   GET  /metrics/latest
void register_routes(httplib::Server& server, Service& service);

}  // namespace sexism_alert
