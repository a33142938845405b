#include "arena/llm/provider.hpp"

#include <algorithm>
#include <cstdlib>
#include <regex>
#include <thread>

#include <httplib.h>

#include <fmt/format.h>

#include "arena/errors.hpp"
#include "arena/util/text.hpp"

namespace arena {

ProviderConfig provider_from_json(const std::string& alias, const json& j) {
  ProviderConfig c;
  c.alias = alias;
  try {
    c.endpoint = j.at("endpoint").get<std::string>();
    c.model = j.at("model").get<std::string>();
    c.auth_env = j.value("auth_env", std::string());
    c.temperature = j.value("temperature", c.temperature);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
    c.retry_budget = j.value("retry_budget", c.retry_budget);
    c.parse_retries = j.value("parse_retries", c.parse_retries);
    c.qps = j.value("qps", c.qps);
    c.backoff_initial_ms = j.value("backoff_initial_ms", c.backoff_initial_ms);
    c.backoff_max_ms = j.value("backoff_max_ms", c.backoff_max_ms);
  } catch (const json::exception& e) {
    throw ProviderConfigError(fmt::format("provider '{}': {}", alias, e.what()));
  }
  if (c.endpoint.rfind("http://", 0) != 0 && c.endpoint.rfind("https://", 0) != 0) {
    throw ProviderConfigError(fmt::format("provider '{}': endpoint must be an http(s) URL", alias));
  }
  if (c.timeout_ms <= 0 || c.retry_budget < 0 || c.parse_retries < 0 || c.max_tokens <= 0 || c.qps < 0 ||
      c.backoff_initial_ms < 0 || c.backoff_max_ms < c.backoff_initial_ms) {
    throw ProviderConfigError(fmt::format("provider '{}': invalid limits", alias));
  }
  return c;
}

ProviderRegistry ProviderRegistry::from_json(const json& j) {
  if (!j.is_object() || !j.contains("providers") || !j.at("providers").is_object()) {
    throw ProviderConfigError("registry must be an object with a \"providers\" object");
  }
  ProviderRegistry r;
  for (const auto& [alias, entry] : j.at("providers").items()) r.add(provider_from_json(alias, entry));
  return r;
}

ProviderRegistry ProviderRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ProviderConfigError(fmt::format("cannot open provider registry {}", path.string()));
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ProviderConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void ProviderRegistry::add(ProviderConfig config) {
  auto alias = config.alias;
  providers_[alias] = std::move(config);
}

const ProviderConfig& ProviderRegistry::get(const std::string& alias) const {
  const auto it = providers_.find(alias);
  if (it == providers_.end()) throw ProviderConfigError(fmt::format("unknown provider alias '{}'", alias));
  return it->second;
}

std::vector<std::string> ProviderRegistry::aliases() const {
  std::vector<std::string> out;
  for (const auto& [alias, _] : providers_) out.push_back(alias);
  return out;
}

// ---- transport ------------------------------------------------------------------

namespace {

class HttplibTransport final : public ChatTransport {
 public:
  HttpResponse post(const std::string& url, const std::string& body, const HttpHeaders& headers,
                    int timeout_ms) override {
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, kUrl)) throw TransportError(fmt::format("malformed endpoint URL '{}'", url));
    httplib::Client client(m[1].str());
    const auto timeout = std::chrono::milliseconds(timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    const auto path = m[2].matched ? m[2].str() : std::string("/");
    auto res = client.Post(path, h, body, "application/json");
    if (!res) throw TransportError(fmt::format("POST {}: {}", url, httplib::to_string(res.error())));
    return HttpResponse{res->status, res->body};
  }
};

}  // namespace

std::shared_ptr<ChatTransport> make_http_transport() { return std::make_shared<HttplibTransport>(); }

// ---- rate limiter -------------------------------------------------------------------

RateLimiter::RateLimiter(double qps, double burst)
    : qps_(qps), burst_(std::max(1.0, burst)), tokens_(std::max(1.0, burst)), last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (qps_ <= 0.0) return;
  for (;;) {
    std::chrono::duration<double> wait{};
    {
      std::lock_guard lock(mu_);
      const auto now = std::chrono::steady_clock::now();
      tokens_ = std::min(burst_, tokens_ + std::chrono::duration<double>(now - last_).count() * qps_);
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / qps_);
    }
    std::this_thread::sleep_for(wait);
  }
}

// ---- audit ----------------------------------------------------------------------------

AuditLog::AuditLog(const std::filesystem::path& path) : out_(path, std::ios::app) {
  if (!out_) throw TransportError(fmt::format("cannot open audit log {}", path.string()));
}

void AuditLog::record(const std::string& game_id, int round, const std::string& hash, const std::string& raw_reply) {
  const json rec{{"game_id", game_id}, {"round", round}, {"prompt_hash", hash}, {"raw_reply", raw_reply}};
  std::lock_guard lock(mu_);
  out_ << rec.dump() << '\n';
  out_.flush();
}

std::string prompt_hash(const std::vector<ChatMessage>& messages) {
  json arr = json::array();
  for (const auto& m : messages) arr.push_back({{"role", m.role}, {"content", m.content}});
  return sha256_hex(arr.dump());
}

// ---- client -----------------------------------------------------------------------------

ChatClient::ChatClient(ProviderConfig config, std::shared_ptr<ChatTransport> transport, std::shared_ptr<AuditLog> audit)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      audit_(std::move(audit)),
      limiter_(config_.qps),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  if (!transport_) transport_ = make_http_transport();
}

std::string ChatClient::request_body(const std::vector<ChatMessage>& messages) const {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return json{{"model", config_.model},
              {"messages", std::move(msgs)},
              {"temperature", config_.temperature},
              {"max_tokens", config_.max_tokens}}
      .dump();
}

HttpHeaders ChatClient::headers() const {
  HttpHeaders h;
  if (!config_.auth_env.empty()) {
    const char* token = std::getenv(config_.auth_env.c_str());
    if (!token || !*token) {
      throw AuthError(fmt::format("provider '{}': environment variable {} is not set", config_.alias, config_.auth_env));
    }
    h.emplace_back("Authorization", fmt::format("Bearer {}", token));
  }
  return h;
}

namespace {

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

std::string content_of(const std::string& body) {
  const auto j = json::parse(body);
  const auto& content = j.at("choices").at(0).at("message").at("content");
  return content.is_null() ? std::string() : content.get<std::string>();
}

}  // namespace

std::string ChatClient::complete(const std::vector<ChatMessage>& messages, const AuditContext& ctx) {
  const auto body = request_body(messages);
  const auto hdrs = headers();
  std::string last_error;
  auto backoff = std::chrono::milliseconds(config_.backoff_initial_ms);
  for (int attempt = 0; attempt <= config_.retry_budget; ++attempt) {
    if (attempt > 0) {
      sleeper_(backoff);
      backoff = std::min(backoff * 2, std::chrono::milliseconds(config_.backoff_max_ms));
    }
    limiter_.acquire();
    ++requests_;
    HttpResponse res;
    try {
      res = transport_->post(config_.endpoint, body, hdrs, config_.timeout_ms);
    } catch (const TransportError& e) {
      last_error = e.what();
      continue;
    }
    if (res.status == 401 || res.status == 403) {
      throw AuthError(fmt::format("provider '{}' rejected credentials (HTTP {})", config_.alias, res.status));
    }
    if (retryable_status(res.status)) {
      last_error = fmt::format("HTTP {}", res.status);
      continue;
    }
    if (res.status < 200 || res.status >= 300) {
      throw TransportError(fmt::format("provider '{}': HTTP {}: {}", config_.alias, res.status, res.body.substr(0, 200)));
    }
    std::string text;
    try {
      text = content_of(res.body);
    } catch (const json::exception& e) {
      last_error = fmt::format("malformed response: {}", e.what());
      continue;
    }
    if (audit_) audit_->record(ctx.game_id, ctx.round, prompt_hash(messages), text);
    return text;
  }
  throw TransportError(fmt::format("provider '{}': giving up after {} attempts: {}", config_.alias,
                                   config_.retry_budget + 1, last_error));
}

}  // namespace arena
