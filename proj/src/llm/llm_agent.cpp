#include "arena/llm/llm_agent.hpp"

#include <fmt/format.h>

#include "arena/errors.hpp"
#include "arena/llm/prompts.hpp"

namespace arena {

LlmAgent::LlmAgent(std::shared_ptr<ChatClient> client, std::string game_id)
    : client_(std::move(client)), game_id_(std::move(game_id)) {}

Action LlmAgent::act(const Observation& obs) {
  if (turns_.empty()) turns_.push_back({"system", build_system_prompt(obs)});
  turns_.push_back({"user", build_turn_prompt(obs)});
  const int attempts = 1 + client_->config().parse_retries;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    auto raw = client_->complete(turns_, AuditContext{game_id_, obs.round});
    turns_.push_back({"assistant", raw.empty() ? std::string("(empty reply)") : raw});
    try {
      auto action = parse_reply(raw, obs);
      last_ = ParsedReply{action, std::move(raw), attempt};
      return action;
    } catch (const ArenaError& e) {
      if (e.kind() != "ParseFailure" && e.kind() != "RangeViolation") throw;
      turns_.push_back({"user", fmt::format("Your reply could not be used: {}. Please answer again.\n{}", e.what(),
                                            reply_guideline(obs))});
    }
  }
  degraded_ = true;
  auto fallback = safe_default_action(obs);
  last_ = ParsedReply{fallback, turns_[turns_.size() - 2].content, attempts};
  return fallback;
}

ChatClientPool::ChatClientPool(ProviderRegistry registry, std::shared_ptr<ChatTransport> transport,
                               std::shared_ptr<AuditLog> audit)
    : registry_(std::move(registry)), transport_(std::move(transport)), audit_(std::move(audit)) {
  if (!transport_) transport_ = make_http_transport();
}

std::shared_ptr<ChatClient> ChatClientPool::get(const std::string& alias) {
  std::lock_guard lock(mu_);
  auto& slot = clients_[alias];
  if (!slot) slot = std::make_shared<ChatClient>(registry_.get(alias), transport_, audit_);
  return slot;
}

AgentFactory make_agent_factory(std::shared_ptr<ChatClientPool> pool) {
  auto scripted = scripted_agent_factory();
  return [pool = std::move(pool), scripted](const AgentSpec& spec, const GameConfig& config, Player role,
                                            std::uint64_t seed, const std::string& game_id) -> std::unique_ptr<Agent> {
    if (spec.kind == AgentKind::Llm) {
      if (!pool) throw ProviderConfigError("no provider registry configured for llm agents");
      return std::make_unique<LlmAgent>(pool->get(spec.ref), game_id);
    }
    return scripted(spec, config, role, seed, game_id);
  };
}

}  // namespace arena
