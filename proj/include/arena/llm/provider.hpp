#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "arena/core/json.hpp"

namespace arena {

// One entry of the provider registry. `endpoint` is the full URL of an
// OpenAI-compatible chat-completions route.
struct ProviderConfig {
  std::string alias;
  std::string endpoint;
  std::string model;
  std::string auth_env;  // name of the env var holding the bearer token; empty: no auth
  double temperature = 1.0;
  int max_tokens = 512;
  int timeout_ms = 60'000;
  int retry_budget = 3;      // transport retries after the first attempt
  int parse_retries = 2;     // corrective re-prompts after an unusable reply
  double qps = 0.0;          // 0: unlimited
  int backoff_initial_ms = 500;
  int backoff_max_ms = 8'000;
};

ProviderConfig provider_from_json(const std::string& alias, const json& j);

// {"providers": {"alias": {...}}}
class ProviderRegistry {
 public:
  static ProviderRegistry from_json(const json& j);
  static ProviderRegistry load(const std::filesystem::path& path);

  void add(ProviderConfig config);
  const ProviderConfig& get(const std::string& alias) const;  // ProviderConfigError if unknown
  bool contains(const std::string& alias) const { return providers_.count(alias) > 0; }
  std::vector<std::string> aliases() const;

 private:
  std::map<std::string, ProviderConfig> providers_;
};

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

// Network seam; tests inject fakes. Throws TransportError on connection
// failures and timeouts.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual HttpResponse post(const std::string& url, const std::string& body, const HttpHeaders& headers,
                            int timeout_ms) = 0;
};

std::shared_ptr<ChatTransport> make_http_transport();

// Token bucket; qps <= 0 disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double qps, double burst = 1.0);
  void acquire();

 private:
  double qps_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mu_;
};

// Append-only JSONL record of every request: game_id, round, prompt_hash and
// the raw reply.
class AuditLog {
 public:
  explicit AuditLog(const std::filesystem::path& path);
  void record(const std::string& game_id, int round, const std::string& prompt_hash, const std::string& raw_reply);

 private:
  std::ofstream out_;
  std::mutex mu_;
};

struct AuditContext {
  std::string game_id;
  int round = 0;
};

std::string prompt_hash(const std::vector<ChatMessage>& messages);

// Sends chat requests for one provider: rate limiting, retries with
// exponential backoff on timeouts / 408 / 429 / 5xx, AuthError on 401 / 403.
class ChatClient {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  ChatClient(ProviderConfig config, std::shared_ptr<ChatTransport> transport,
             std::shared_ptr<AuditLog> audit = nullptr);

  std::string complete(const std::vector<ChatMessage>& messages, const AuditContext& ctx = {});

  const ProviderConfig& config() const noexcept { return config_; }
  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }
  std::uint64_t requests_sent() const noexcept { return requests_; }

 private:
  std::string request_body(const std::vector<ChatMessage>& messages) const;
  HttpHeaders headers() const;

  ProviderConfig config_;
  std::shared_ptr<ChatTransport> transport_;
  std::shared_ptr<AuditLog> audit_;
  RateLimiter limiter_;
  Sleeper sleeper_;
  std::atomic<std::uint64_t> requests_{0};
};

}  // namespace arena
