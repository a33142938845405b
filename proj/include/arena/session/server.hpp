#pragma once

#include <memory>
#include <string>
#include <thread>

#include "arena/session/session.hpp"

namespace httplib {
class Server;
}

namespace arena {

// HTTP front end of a SessionManager. JSON in, JSON out.
//
//   POST /sessions                    {config_id, role, opponent?, name?, request_id?}
//   POST /sessions/{id}/attention     {code, request_id?}
//   GET  /sessions/{id}/state
//   POST /sessions/{id}/action        {action, request_id?}
//   POST /sessions/{id}/quiz          {answer, request_id?}
//   GET  /sessions/{id}
//   GET  /configs
//   GET  /health
//
// Transcripts carry the full configuration and are never served to the
// participant; they are written to the manager's transcript directory.
//
// Errors: {"error": kind, "message": text} with 400, 404, 409, 422, 502 or 500.
class SessionServer {
 public:
  explicit SessionServer(SessionManager& sessions);
  ~SessionServer();
  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  // Binds (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  // bind + listen on a background thread.
  int start(const std::string& host, int port);
  void stop();

 private:
  SessionManager& sessions_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

int http_status_for(const std::string& error_kind) noexcept;

}  // namespace arena
