#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "coha/error.hpp"
#include "coha/providers.hpp"
#include "coha/session.hpp"
#include "coha/store.hpp"

namespace coha {

struct ApiRequest {
  std::string method;  // GET | POST
  std::string path;
  std::map<std::string, std::string> headers;  // lower-case names
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// HTTP status for a library error code.
int http_status(ErrorCode code);

using ProviderFactory =
    std::function<std::unique_ptr<ChatProvider>(const SessionEntry& entry, const Transcript& transcript)>;

struct ServiceOptions {
  // Used for follow-ups when no factory is given. A replay provider without a
  // fixture replays the session's own transcript.
  ProviderConfig provider;
  ProviderFactory provider_factory;
  double alpha = 0.01;
  std::chrono::seconds token_ttl = std::chrono::hours(12);
  std::function<std::chrono::system_clock::time_point()> now = [] {
    return std::chrono::system_clock::now();
  };
};

// The review API over one project opened for writing. handle() is the whole
// API; listen() only adapts it to HTTP.
class ReviewService {
 public:
  ReviewService(Project project, ServiceOptions options = {});
  ~ReviewService();

  // Bearer token for a registered reviewer; throws coha::Error(unauthorized)
  // for anyone else.
  std::string issue_token(const std::string& reviewer_id);

  ApiResponse handle(const ApiRequest& request);

  // Binds and returns the bound port (0 picks a free one). Throws
  // coha::Error(io) when the address is unavailable.
  int bind(const std::string& host, int port);
  // Serves until stop(); call after bind().
  void run();
  void stop();

 private:
  struct TokenInfo {
    std::string reviewer_id;
    std::chrono::system_clock::time_point expiry;
  };
  struct SessionSlot;
  struct HttpServer;

  std::string authenticate(const ApiRequest& request);
  ApiResponse route(const ApiRequest& request, const std::string& reviewer);
  ApiResponse post_coding(const ApiRequest& request, const std::string& reviewer);
  ApiResponse get_codings(const std::string& query_id, const std::string& reviewer);
  ApiResponse followup(const std::string& session_id, const ApiRequest& request);
  SessionSlot& slot_for(const std::string& session_id);

  Project project_;
  ServiceOptions options_;
  std::shared_mutex state_mutex_;  // writers exclusive, readers shared
  std::mutex tokens_mutex_;
  std::map<std::string, TokenInfo> tokens_;
  std::mutex idempotency_mutex_;
  std::map<std::string, ApiResponse> idempotency_;
  std::mutex slots_mutex_;
  std::map<std::string, std::unique_ptr<SessionSlot>> slots_;
  std::unique_ptr<HttpServer> http_;
};

}  // namespace coha
