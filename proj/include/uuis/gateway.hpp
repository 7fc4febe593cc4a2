#pragma once

// HTTP/JSON binding of the service operations.
//
// Every response is an envelope {status, error_code, message, details,
// payload, confirmation_token}. Requests carry "Authorization: Bearer <token>"
// except POST /api/sessions and GET /api/health.
//
// Confirmable endpoints run in two phases. A call without "confirm": true
// computes the consequence without committing and returns it with a
// confirmation_token. Repeating the identical call with "confirm": true and
// that token commits. Tokens are bound to the session, method, path and body,
// and are single-use.

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <string>

#include <json.hpp>

#include "uuis/system.hpp"

namespace httplib {
class Server;
}

namespace uuis {

struct ApiRequest {
  std::string method;
  std::string path;
  std::string bearer;
  std::string body;
  std::map<std::string, std::string> query;
};

struct ApiResponse {
  int http_status = 200;
  nlohmann::json body;
};

int http_status_for(ErrorCode code) noexcept;

class Gateway {
 public:
  explicit Gateway(System& system);
  ~Gateway();

  // Transport-independent dispatch; the HTTP server calls this.
  ApiResponse handle(const ApiRequest& request);

  // Binds and serves until stop(). Throws BindFailure.
  void listen(const std::string& host, int port);
  // Binds an ephemeral port and serves on a background thread; returns the port.
  int start_background(const std::string& host = "127.0.0.1");
  void stop();

  std::size_t outstanding_confirmations() const;

 private:
  struct Pending {
    std::string session;
    std::string binding;
    Timestamp expires{};
  };
  class Router;

  std::string issue_confirmation(const std::string& session, const std::string& binding);
  void redeem_confirmation(const std::string& token, const std::string& session, const std::string& binding);

  System& sys_;
  std::unique_ptr<Router> router_;
  std::unique_ptr<httplib::Server> server_;
  std::thread server_thread_;
  mutable std::mutex pending_mutex_;
  std::map<std::string, Pending> pending_;
};

}  // namespace uuis
