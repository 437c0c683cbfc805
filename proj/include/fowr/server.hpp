#pragma once

#include <sstream>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "error.hpp"
#include "session.hpp"

namespace fowr {

// JSON request/response API over the session store, consumed by the rating
// client:
//
//   GET  /api/config                       experiment name, catalog size, questionnaire items
//   POST /api/sessions                     {subject_id, idempotency_token}
//   GET  /api/sessions/{id}
//   GET  /api/sessions/{id}/next           {done, pvs_id, media, position, total}
//   POST /api/sessions/{id}/votes          {pvs_id, vote, idempotency_token}
//   POST /api/sessions/{id}/questionnaire  {confidence, focus, tiredness, idempotency_token}
//   POST /api/sessions/{id}/reliability    {reliability_index, idempotency_token}
//   POST /api/sessions/{id}/abandon        {idempotency_token}
//   GET  /api/export[?include_abandoned=1] rating file (text/csv)
//
// Errors are {"error": message, "code": kind} with 400 (malformed request),
// 404 (unknown session), 409 (state conflict) or 422 (invalid value).

namespace detail {

inline const char* code_name(session_error::kind k) {
  switch (k) {
    case session_error::kind::not_found: return "not_found";
    case session_error::kind::conflict: return "conflict";
    case session_error::kind::out_of_order: return "out_of_order";
    case session_error::kind::duplicate: return "duplicate";
    case session_error::kind::premature: return "premature";
    case session_error::kind::closed: return "closed";
    case session_error::kind::invalid: return "invalid";
  }
  return "error";
}

inline int http_status(session_error::kind k) {
  switch (k) {
    case session_error::kind::not_found: return 404;
    case session_error::kind::invalid: return 422;
    default: return 409;
  }
}

inline void reply(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void fail(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  reply(res, status, {{"error", message}, {"code", code}});
}

/// Parses the body, requires an idempotency token, and maps store errors to
/// HTTP statuses.
template <class Handler>
auto mutating(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body.empty() ? "{}" : req.body);
    } catch (const nlohmann::json::exception&) {
      return fail(res, 400, "bad_request", "request body is not valid JSON");
    }
    const auto token = body.is_object() ? body.value("idempotency_token", std::string{}) : std::string{};
    if (token.empty()) return fail(res, 400, "bad_request", "idempotency_token is required");
    try {
      handler(req, body, token, res);
    } catch (const session_error& e) {
      fail(res, http_status(e.code()), code_name(e.code()), e.what());
    } catch (const nlohmann::json::exception& e) {
      fail(res, 400, "bad_request", std::string("malformed request: ") + e.what());
    } catch (const error& e) {
      fail(res, 500, "internal", e.what());
    }
  };
}

template <class Handler>
auto reading(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const session_error& e) {
      fail(res, http_status(e.code()), code_name(e.code()), e.what());
    } catch (const error& e) {
      fail(res, 500, "internal", e.what());
    }
  };
}

}  // namespace detail

inline void register_routes(httplib::Server& server, SessionStore& store) {
  using namespace detail;
  using json = nlohmann::json;

  server.Get("/api/config", [&store](const httplib::Request&, httplib::Response& res) {
    const auto& c = store.config();
    reply(res, 200,
          {{"name", c.name},
           {"stimuli", c.catalog.size()},
           {"repetitions", c.repetitions},
           {"questionnaire", {{"enabled", c.questionnaire_enabled}, {"items", c.questionnaire_items}}}});
  });

  server.Post("/api/sessions", mutating([&store](const httplib::Request&, const json& body, const std::string& token,
                                                 httplib::Response& res) {
                reply(res, 201, store.to_json(store.start_session(body.at("subject_id").get<std::string>(), token)));
              }));

  server.Get(R"(/api/sessions/([^/]+))", reading([&store](const httplib::Request& req, httplib::Response& res) {
               reply(res, 200, store.to_json(store.get(req.matches[1])));
             }));

  server.Get(R"(/api/sessions/([^/]+)/next)", reading([&store](const httplib::Request& req, httplib::Response& res) {
               const std::string id = req.matches[1];
               const auto state = store.get(id);
               const auto next = store.next_stimulus(id);
               if (!next) return reply(res, 200, {{"done", true}, {"status", to_string(state.status)}, {"total", state.order.size()}});
               reply(res, 200,
                     {{"done", false},
                      {"pvs_id", next->pvs_id},
                      {"media", next->media},
                      {"position", state.cursor},
                      {"total", state.order.size()}});
             }));

  server.Post(R"(/api/sessions/([^/]+)/votes)",
              mutating([&store](const httplib::Request& req, const json& body, const std::string& token,
                                httplib::Response& res) {
                reply(res, 200,
                      store.to_json(store.submit_vote(req.matches[1], body.at("pvs_id").get<std::string>(),
                                                      body.at("vote").get<int>(), token)));
              }));

  server.Post(R"(/api/sessions/([^/]+)/questionnaire)",
              mutating([&store](const httplib::Request& req, const json& body, const std::string& token,
                                httplib::Response& res) {
                QuestionnaireResponse r{body.at("confidence").get<int>(), body.at("focus").get<int>(),
                                        body.at("tiredness").get<int>()};
                reply(res, 200, store.to_json(store.submit_questionnaire(req.matches[1], r, token)));
              }));

  server.Post(R"(/api/sessions/([^/]+)/reliability)",
              mutating([&store](const httplib::Request& req, const json& body, const std::string& token,
                                httplib::Response& res) {
                reply(res, 200,
                      store.to_json(store.post_reliability(req.matches[1], body.at("reliability_index").get<int>(), token)));
              }));

  server.Post(R"(/api/sessions/([^/]+)/abandon)",
              mutating([&store](const httplib::Request& req, const json&, const std::string& token,
                                httplib::Response& res) {
                reply(res, 200, store.to_json(store.abandon(req.matches[1], token)));
              }));

  server.Get("/api/export", reading([&store](const httplib::Request& req, httplib::Response& res) {
               const auto flag = req.get_param_value("include_abandoned");
               std::ostringstream out;
               store.export_ratings(out, flag == "1" || flag == "true");
               res.set_content(out.str(), "text/csv");
             }));
}

}  // namespace fowr
