#pragma once

// HTTP/JSON routes for review sessions (cpp-httplib).
//
//   GET    /api/datasets                     list datasets with schemas
//   POST   /api/datasets                     {"name", "csv"} or text/csv with ?name=
//   POST   /api/sessions                     {"dataset", "policy", "budget", "seed"?, "simulate"?}
//   GET    /api/sessions                     list session summaries
//   GET    /api/sessions/{id}                session summary
//   GET    /api/sessions/{id}/candidate      pending row (409 when none)
//   POST   /api/sessions/{id}/label          {"row_id", "goals"}
//   GET    /api/sessions/{id}/report         model + history + trajectory
//   POST   /api/sessions/{id}/score          {"rows": [...]} scored by the current model
//   DELETE /api/sessions/{id}                close the session

#include <string>

#include <httplib.h>
#include <json.hpp>

#include "frugal/review.hpp"

namespace frugal::review {

inline void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, versioned({{"error", message}, {"status", status}}));
}

inline json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw ServiceError(400, std::string("body is not valid JSON: ") + e.what());
  }
}

template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const ServiceError& e) {
      send_error(res, e.status(), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  };
}

inline void install_routes(httplib::Server& server, SessionManager& mgr) {
  server.Get("/api/datasets", guarded([&](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    for (const auto& e : mgr.datasets().list()) list.push_back(dataset_json(*e));
    send_json(res, 200, versioned({{"datasets", list}}));
  }));

  server.Post("/api/datasets", guarded([&](const httplib::Request& req, httplib::Response& res) {
    std::string name, csv;
    if (req.get_header_value("Content-Type").rfind("text/csv", 0) == 0) {
      name = req.get_param_value("name");
      csv = req.body;
    } else {
      const json body = parse_body(req);
      if (!body.is_object() || !body.contains("name") || !body.contains("csv") || !body["name"].is_string() ||
          !body["csv"].is_string())
        throw ServiceError(400, "expected {\"name\": string, \"csv\": string}");
      name = body["name"].get<std::string>();
      csv = body["csv"].get<std::string>();
    }
    auto entry = mgr.upload(name, csv);
    send_json(res, 201, versioned(dataset_json(*entry)));
  }));

  server.Post("/api/sessions", guarded([&](const httplib::Request& req, httplib::Response& res) {
    auto s = mgr.create(parse_create(parse_body(req)));
    send_json(res, 201, s->summary());
  }));

  server.Get("/api/sessions", guarded([&](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    for (const auto& s : mgr.list()) {
      json j = s->summary();
      j.erase("schema_version");
      list.push_back(std::move(j));
    }
    send_json(res, 200, versioned({{"sessions", list}}));
  }));

  server.Get(R"(/api/sessions/([0-9a-f]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, mgr.get(req.matches[1])->summary());
  }));

  server.Get(R"(/api/sessions/([0-9a-f]+)/candidate)",
             guarded([&](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, mgr.get(req.matches[1])->candidate());
             }));

  server.Post(R"(/api/sessions/([0-9a-f]+)/label)", guarded([&](const httplib::Request& req, httplib::Response& res) {
    auto s = mgr.get(req.matches[1]);
    const json body = parse_body(req);
    if (!body.is_object() || !body.contains("row_id") || !body["row_id"].is_number_unsigned() ||
        !body.contains("goals"))
      throw ServiceError(400, "expected {\"row_id\": integer, \"goals\": [...] or {...}}");
    send_json(res, 200, s->submit(body["row_id"].get<std::size_t>(), body["goals"]));
  }));

  server.Get(R"(/api/sessions/([0-9a-f]+)/report)", guarded([&](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, mgr.get(req.matches[1])->report());
  }));

  server.Post(R"(/api/sessions/([0-9a-f]+)/score)", guarded([&](const httplib::Request& req, httplib::Response& res) {
    auto s = mgr.get(req.matches[1]);
    const json body = parse_body(req);
    if (!body.is_object() || !body.contains("rows") || !body["rows"].is_array())
      throw ServiceError(400, "expected {\"rows\": [...]}");
    const FrozenModel model = s->frozen();
    json out = json::array();
    std::size_t i = 0;
    for (const auto& r : body["rows"]) out.push_back(scores_json(model.score(json_row(model.schema(), r, i++))));
    send_json(res, 200, versioned({{"scores", out}}));
  }));

  server.Delete(R"(/api/sessions/([0-9a-f]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
    auto s = mgr.get(req.matches[1]);
    s->close();
    send_json(res, 200, s->summary());
  }));
}

}  // namespace frugal::review
