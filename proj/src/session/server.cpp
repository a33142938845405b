#include "arena/session/server.hpp"

#include <httplib.h>

#include "arena/errors.hpp"

namespace arena {

int http_status_for(const std::string& kind) noexcept {
  if (kind == "UnknownSession" || kind == "UnknownConfig") return 404;
  if (kind == "WrongStage") return 409;
  if (kind == "IllegalAction" || kind == "MessageNotAllowed" || kind == "UnsupportedRole" ||
      kind == "UnsupportedFamily" || kind == "InvalidAgentSpec" || kind == "DomainError") {
    return 422;
  }
  if (kind == "BadRequest") return 400;
  if (kind == "OpponentFailure") return 502;
  return 500;
}

namespace {

struct BadRequest : ArenaError {
  explicit BadRequest(const std::string& what) : ArenaError("BadRequest", what) {}
};

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const std::string& kind, const std::string& message) {
  send_json(res, http_status_for(kind), json{{"error", kind}, {"message", message}});
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j;
  try {
    j = json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw BadRequest(std::string("request body is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw BadRequest("request body must be a JSON object");
  return j;
}

std::optional<std::string> request_id_of(const json& body) {
  if (!body.contains("request_id") || body["request_id"].is_null()) return std::nullopt;
  if (!body["request_id"].is_string()) throw BadRequest("request_id must be a string");
  return body["request_id"].get<std::string>();
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      send_json(res, 200, f(req));
    } catch (const ArenaError& e) {
      send_error(res, e.kind(), e.what());
    } catch (const json::exception& e) {
      send_error(res, "BadRequest", e.what());
    } catch (const std::exception& e) {
      send_error(res, "InternalError", e.what());
    }
  };
}

}  // namespace

SessionServer::SessionServer(SessionManager& sessions)
    : sessions_(sessions), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Headers", "Content-Type"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.body.empty()) {
      res.set_content(json{{"error", "NotFound"}, {"message", "no route for " + req.method + " " + req.path}}.dump(),
                      "application/json");
    }
  });
  s.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  s.Get("/health", guarded([](const httplib::Request&) { return json{{"status", "ok"}}; }));
  s.Get("/configs", guarded([this](const httplib::Request&) { return sessions_.list_configs(); }));

  s.Post("/sessions", guarded([this](const httplib::Request& req) {
           const json body = body_of(req);
           CreateRequest r;
           if (!body.contains("config_id") || !body["config_id"].is_string()) throw BadRequest("config_id is required");
           r.config_id = body["config_id"].get<std::string>();
           try {
             r.role = parse_player(body.value("role", std::string("bob")));
           } catch (const ArenaError& e) {
             throw BadRequest(e.what());
           }
           if (body.contains("opponent") && !body["opponent"].is_null()) {
             r.opponent = AgentSpec::parse(body["opponent"].get<std::string>());
           }
           r.name = body.value("name", std::string());
           r.request_id = request_id_of(body);
           return sessions_.create_session(r);
         }));

  s.Post(R"(/sessions/([^/]+)/attention)", guarded([this](const httplib::Request& req) {
           const json body = body_of(req);
           if (!body.contains("code") || !body["code"].is_string()) throw BadRequest("code is required");
           return sessions_.submit_attention(req.matches[1], body["code"].get<std::string>(), request_id_of(body));
         }));

  s.Get(R"(/sessions/([^/]+)/state)",
        guarded([this](const httplib::Request& req) { return sessions_.get_state(req.matches[1]); }));

  s.Post(R"(/sessions/([^/]+)/action)", guarded([this](const httplib::Request& req) {
           const json body = body_of(req);
           if (!body.contains("action") || !body["action"].is_object()) throw BadRequest("action object is required");
           return sessions_.submit_action(req.matches[1], body["action"], request_id_of(body));
         }));

  s.Post(R"(/sessions/([^/]+)/quiz)", guarded([this](const httplib::Request& req) {
           const json body = body_of(req);
           if (!body.contains("answer") || !body["answer"].is_number_integer()) {
             throw BadRequest("answer must be an option index");
           }
           return sessions_.submit_quiz(req.matches[1], body["answer"].get<int>(), request_id_of(body));
         }));


  s.Get(R"(/sessions/([^/]+))",
        guarded([this](const httplib::Request& req) { return sessions_.get_session(req.matches[1]); }));
}

SessionServer::~SessionServer() { stop(); }

int SessionServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  if (!server_->bind_to_port(host, port)) throw TransportError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void SessionServer::listen() { server_->listen_after_bind(); }

int SessionServer::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  if (bound < 0) throw TransportError("cannot bind " + host);
  thread_ = std::thread([this] { listen(); });
  server_->wait_until_ready();
  return bound;
}

void SessionServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace arena
