#include <gtest/gtest.h>

#include "../support/fake_transport.hpp"
#include "arena/errors.hpp"
#include "arena/llm/llm_agent.hpp"
#include "helpers.hpp"

using namespace arena;
using namespace arena::testing;

namespace {

std::shared_ptr<ChatClient> client_for(std::shared_ptr<ScriptedTransport> t, int parse_retries = 2) {
  ProviderConfig c;
  c.alias = "scripted";
  c.endpoint = "http://127.0.0.1:1/";
  c.model = "m";
  c.retry_budget = 0;
  c.parse_retries = parse_retries;
  return std::make_shared<ChatClient>(c, t);
}

Observation bob_facing_offer() {
  auto s = new_game(bargaining(0.9, 0.9, 1'000, Horizon::finite(3)), 1);
  return observe(apply_action(s, ProposeSplit{600, std::nullopt}), Player::Bob);
}

}  // namespace

TEST(LlmAgent, FirstTurnSendsSystemAndTurnPrompt) {
  auto t = std::make_shared<ScriptedTransport>();
  t->reply("{\"decision\": \"accept\"}");
  LlmAgent agent(client_for(t), "g");
  EXPECT_EQ(agent.act(bob_facing_offer()), Action(Respond{true}));
  const auto msgs = t->messages(0);
  ASSERT_EQ(msgs.size(), 2u);
  EXPECT_EQ(msgs[0].at("role"), "system");
  EXPECT_EQ(msgs[1].at("role"), "user");
  EXPECT_EQ(agent.last_reply()->parse_attempts, 1);
  EXPECT_FALSE(agent.degraded());
}

TEST(LlmAgent, CorrectiveRetryAfterParseFailure) {
  auto t = std::make_shared<ScriptedTransport>();
  t->reply("I think I will accept.");
  t->reply("{\"decision\": \"reject\"}");
  LlmAgent agent(client_for(t), "g");
  EXPECT_EQ(agent.act(bob_facing_offer()), Action(Respond{false}));
  EXPECT_EQ(agent.last_reply()->parse_attempts, 2);
  const auto msgs = t->messages(1);
  ASSERT_EQ(msgs.size(), 4u);
  EXPECT_EQ(msgs[2].at("role"), "assistant");
  EXPECT_NE(msgs[3].at("content").get<std::string>().find("could not be used"), std::string::npos);
}

TEST(LlmAgent, DegradesToSafeDefaultAfterRetries) {
  auto t = std::make_shared<ScriptedTransport>();
  for (int i = 0; i < 3; ++i) t->reply("{\"decision\": \"perhaps\"}");
  LlmAgent agent(client_for(t, 2), "g");
  EXPECT_EQ(agent.act(bob_facing_offer()), Action(Respond{false}));
  EXPECT_TRUE(agent.degraded());
  EXPECT_EQ(t->requests.size(), 3u);
}

TEST(LlmAgent, RangeViolationAlsoRetries) {
  auto t = std::make_shared<ScriptedTransport>();
  t->reply(R"({"alice_gain": 900, "bob_gain": 900})");
  t->reply(R"({"alice_gain": 900, "bob_gain": 100})");
  LlmAgent agent(client_for(t), "g");
  const auto obs = observe(new_game(bargaining(0.9, 0.9, 1'000, Horizon::finite(3)), 1), Player::Alice);
  EXPECT_EQ(agent.act(obs), Action(ProposeSplit{900, std::nullopt}));
}

TEST(LlmAgent, TransportFailurePropagates) {
  auto t = std::make_shared<ScriptedTransport>();
  t->timeout();
  LlmAgent agent(client_for(t), "g");
  EXPECT_THROW(agent.act(bob_facing_offer()), TransportError);
}

TEST(AgentFactory, BuildsLlmSeatsFromRegistry) {
  ProviderRegistry registry;
  ProviderConfig c;
  c.alias = "fake";
  c.endpoint = "http://127.0.0.1:1/";
  c.model = "m";
  registry.add(c);
  auto t = std::make_shared<ScriptedTransport>();
  t->reply("{\"decision\": \"accept\"}");
  auto factory = make_agent_factory(std::make_shared<ChatClientPool>(registry, t));
  const auto cfg = bargaining(0.9, 0.9, 1'000, Horizon::finite(3));
  auto agent = factory(AgentSpec::parse("llm:fake"), cfg, Player::Bob, 1, "g");
  EXPECT_EQ(agent->act(bob_facing_offer()), Action(Respond{true}));
  EXPECT_THROW(factory(AgentSpec::parse("llm:missing"), cfg, Player::Bob, 1, "g"), ProviderConfigError);
  EXPECT_NE(factory(AgentSpec::parse("spe"), cfg, Player::Alice, 1, "g"), nullptr);
}
