#pragma once

#include <memory>
#include <string>

#include "wbseg/error.hpp"
#include "wbseg/session.hpp"

namespace httplib {
class Server;
}

namespace wbseg {

// HTTP status used for an engine error code.
int http_status_for(ErrorCode code);

/// REST surface over a SessionManager. Error bodies are
/// {"error": <code name>, "message": <text>}.
class HttpService {
 public:
  explicit HttpService(SessionManager& sessions);
  ~HttpService();

  void register_routes(httplib::Server& server);

  // Binds and serves until stop(); port 0 picks a free port.
  bool bind(const std::string& host, int port);
  int port() const { return port_; }
  void serve();  // blocking
  void stop();

 private:
  SessionManager& sessions_;
  std::unique_ptr<httplib::Server> server_;
  int port_ = 0;
};

}  // namespace wbseg
