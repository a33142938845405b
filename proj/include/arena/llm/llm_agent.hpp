#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "arena/agents/agent.hpp"
#include "arena/llm/provider.hpp"
#include "arena/llm/reply_parser.hpp"

namespace arena {

// Plays one seat of one game through a chat model. The conversation keeps
// the system prompt, every turn prompt and every reply. Unusable replies get
// a corrective user message, up to the provider's parse_retries; after that
// the turn is forfeited with safe_default_action and the agent is degraded.
// TransportError and AuthError propagate to the caller.
class LlmAgent final : public Agent {
 public:
  LlmAgent(std::shared_ptr<ChatClient> client, std::string game_id);

  Action act(const Observation& obs) override;
  bool degraded() const override { return degraded_; }

  const std::vector<ChatMessage>& conversation() const noexcept { return turns_; }
  const std::optional<ParsedReply>& last_reply() const noexcept { return last_; }

 private:
  std::shared_ptr<ChatClient> client_;
  std::string game_id_;
  std::vector<ChatMessage> turns_;
  std::optional<ParsedReply> last_;
  bool degraded_ = false;
};

// Lazily builds one ChatClient per provider alias so rate limits are shared
// across games.
class ChatClientPool {
 public:
  ChatClientPool(ProviderRegistry registry, std::shared_ptr<ChatTransport> transport = nullptr,
                 std::shared_ptr<AuditLog> audit = nullptr);

  std::shared_ptr<ChatClient> get(const std::string& alias);
  const ProviderRegistry& registry() const noexcept { return registry_; }

 private:
  ProviderRegistry registry_;
  std::shared_ptr<ChatTransport> transport_;
  std::shared_ptr<AuditLog> audit_;
  std::map<std::string, std::shared_ptr<ChatClient>> clients_;
  std::mutex mu_;
};

// Scripted agents plus llm:<alias> seats served from `pool`.
AgentFactory make_agent_factory(std::shared_ptr<ChatClientPool> pool);

}  // namespace arena
