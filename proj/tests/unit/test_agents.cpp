#include <gtest/gtest.h>

#include <cmath>

#include "../support/oracles.hpp"
#include "arena/errors.hpp"
#include "helpers.hpp"

using namespace arena;
using namespace arena::testing;

TEST(AgentSpec, ParseAndPrint) {
  for (const char* text : {"random", "random:7", "accept", "fixed_split:0.5", "fixed_price:9000", "spe", "bi",
                           "commitment", "commitment:2", "bayes_buyer", "bayes_buyer:reject", "midpoint",
                           "llm:gpt", "human", "human:s1"}) {
    EXPECT_EQ(AgentSpec::parse(text).to_string(), text);
  }
  EXPECT_EQ(AgentSpec::parse("bayes_buyer:reject").tie_break, TieBreak::Reject);
  EXPECT_THROW(AgentSpec::parse("oracle"), InvalidAgentSpec);
  EXPECT_THROW(AgentSpec::parse("fixed_split"), InvalidAgentSpec);
  EXPECT_THROW(AgentSpec::parse("fixed_split:1.5"), InvalidAgentSpec);
  EXPECT_THROW(AgentSpec::parse("spe:3"), InvalidAgentSpec);
  EXPECT_THROW(AgentSpec::parse("llm"), InvalidAgentSpec);
}

TEST(AgentSpec, PairSyntax) {
  auto [a, b] = parse_agent_pair("spe:spe");
  EXPECT_EQ(a.kind, AgentKind::RubinsteinSpe);
  EXPECT_EQ(b.kind, AgentKind::RubinsteinSpe);
  std::tie(a, b) = parse_agent_pair("fixed_split:0.6:random:3");
  EXPECT_EQ(a.value, 0.6);
  EXPECT_EQ(b.seed, 3u);
  std::tie(a, b) = parse_agent_pair("commitment:bayes_buyer:reject");
  EXPECT_EQ(a.kind, AgentKind::CommitmentSeller);
  EXPECT_FALSE(a.value.has_value());
  EXPECT_EQ(b.tie_break, TieBreak::Reject);
  std::tie(a, b) = parse_agent_pair("llm:a:b,spe");
  EXPECT_EQ(a.ref, "a:b");
  EXPECT_THROW(parse_agent_pair("spe"), InvalidAgentSpec);
  EXPECT_THROW(parse_agent_pair("spe:spe:spe"), InvalidAgentSpec);
}

TEST(AgentSpec, CompatibilityChecks) {
  EXPECT_THROW(check_compatible(AgentSpec::parse("spe"), GameFamily::Negotiation, Player::Alice), UnsupportedFamily);
  EXPECT_THROW(check_compatible(AgentSpec::parse("commitment"), GameFamily::Persuasion, Player::Bob), UnsupportedFamily);
  EXPECT_THROW(check_compatible(AgentSpec::parse("bayes_buyer"), GameFamily::Persuasion, Player::Alice),
               UnsupportedFamily);
  EXPECT_NO_THROW(check_compatible(AgentSpec::parse("random"), GameFamily::Persuasion, Player::Bob));
  EXPECT_THROW(make_scripted_agent(AgentSpec::parse("llm:x"), GameFamily::Bargaining, Player::Alice, 1),
               InvalidAgentSpec);
}

TEST(SpeAgent, ProposesRubinsteinShare) {
  const auto cfg = bargaining(0.9, 0.9, 1'000'000, Horizon::unbounded());
  const auto obs = observe(new_game(cfg, 1), Player::Alice);
  const auto a = std::get<ProposeSplit>(act(AgentSpec::parse("spe"), obs));
  EXPECT_NEAR(static_cast<double>(a.alice_amount) / 1e6, 0.526316, 1e-6);
}

TEST(SpeAgent, AcceptsAtContinuationAndRejectsBelow) {
  const auto cfg = bargaining(0.9, 0.9, 1'000'000, Horizon::unbounded());
  auto s = new_game(cfg, 1);
  const auto offer = std::get<ProposeSplit>(act(AgentSpec::parse("spe"), observe(s, Player::Alice)));
  auto at = apply_action(s, offer);
  EXPECT_EQ(act(AgentSpec::parse("spe"), observe(at, Player::Bob)), Action(Respond{true}));
  auto greedy = apply_action(s, ProposeSplit{offer.alice_amount + 1, std::nullopt});
  EXPECT_EQ(act(AgentSpec::parse("spe"), observe(greedy, Player::Bob)), Action(Respond{false}));
}

TEST(SpeAgent, StationaryAfterRejection) {
  const auto cfg = bargaining(0.9, 0.9, 10'000, Horizon::unbounded());
  const auto spe = AgentSpec::parse("spe");
  auto s = new_game(cfg, 1);
  const auto first = std::get<ProposeSplit>(act(spe, observe(s, Player::Alice)));
  s = apply_action(s, first);
  s = apply_action(s, Respond{false});                      // Bob rejects
  s = apply_action(s, ProposeSplit{9'000, std::nullopt});  // Bob asks for little
  s = apply_action(s, act(spe, observe(s, Player::Alice)));
  if (!s.is_terminal()) {
    const auto third = std::get<ProposeSplit>(act(spe, observe(s, Player::Alice)));
    EXPECT_EQ(third.alice_amount, first.alice_amount);
  }
}

TEST(SpeAgent, RubinsteinOracle) {
  const auto r = oracles::rubinstein_oracle();
  EXPECT_TRUE(r.ok) << r.detail;
}

TEST(BiAgent, AgreesInRoundOneAtInductionShare) {
  for (int t = 1; t <= 6; ++t) {
    const auto cfg = bargaining(0.8, 0.95, 1'000'000, Horizon::finite(t));
    const auto end = play(cfg, 1, AgentSpec::parse("bi"), AgentSpec::parse("bi"));
    const auto& o = std::get<BargainingOutcome>(*end.terminal);
    EXPECT_EQ(o.agreed_round, 1) << "T=" << t;
    EXPECT_NEAR(o.alice_share, backward_induction_shares(0.8, 0.95, t).front(), 2e-6) << "T=" << t;
  }
}

TEST(SimpleAgents, AcceptAndFixedSplit) {
  const auto cfg = bargaining(0.9, 0.9, 1'000, Horizon::finite(4));
  auto s = apply_action(new_game(cfg, 1), ProposeSplit{990, std::nullopt});
  EXPECT_EQ(act(AgentSpec::parse("accept"), observe(s, Player::Bob)), Action(Respond{true}));
  EXPECT_EQ(act(AgentSpec::parse("fixed_split:0.4"), observe(s, Player::Bob)), Action(Respond{false}));
  const auto p = std::get<ProposeSplit>(act(AgentSpec::parse("fixed_split:0.4"), observe(new_game(cfg, 1), Player::Alice)));
  EXPECT_EQ(p.alice_amount, 400);
}

TEST(SimpleAgents, RandomIsSeededAndLegal) {
  const auto cfg = negotiation(0.8, 1.2, 1'000, Horizon::finite(5));
  const auto a = play(cfg, 5, AgentSpec::parse("random:1"), AgentSpec::parse("random:2"));
  const auto b = play(cfg, 5, AgentSpec::parse("random:1"), AgentSpec::parse("random:2"));
  EXPECT_EQ(a.history, b.history);
}

TEST(MidpointAgent, ConvergesWhenGainsFromTrade) {
  const auto cfg = negotiation(0.8, 1.2, 10'000, Horizon::finite(10));
  const auto end = play(cfg, 1, AgentSpec::parse("midpoint"), AgentSpec::parse("midpoint"));
  const auto& o = std::get<NegotiationOutcome>(*end.terminal);
  ASSERT_TRUE(o.price.has_value());
  EXPECT_GE(*o.price, 8'000);
  EXPECT_LE(*o.price, 12'000);
}

TEST(MidpointAgent, NeverTradesAgainstOwnValue) {
  const auto cfg = negotiation(1.5, 0.8, 10'000, Horizon::finite(10));
  const auto end = play(cfg, 1, AgentSpec::parse("midpoint"), AgentSpec::parse("midpoint"));
  EXPECT_FALSE(std::get<NegotiationOutcome>(*end.terminal).price.has_value());
}

TEST(PersuasionAgents, CommitmentAgainstBayesianBuyer) {
  const auto cfg = persuasion(0.5, 1.25, 200);
  const auto end = play(cfg, 3, AgentSpec::parse("commitment"), AgentSpec::parse("bayes_buyer"));
  const auto& o = std::get<PersuasionOutcome>(*end.terminal);
  EXPECT_EQ(o.high_sold, o.high_rounds);  // high quality is always recommended and bought
  EXPECT_GT(o.low_sold, 0);
  const auto strict = play(cfg, 3, AgentSpec::parse("commitment"), AgentSpec::parse("bayes_buyer:reject"));
  EXPECT_EQ(std::get<PersuasionOutcome>(*strict.terminal).buys(), 0);
}

TEST(PersuasionAgents, FreeTextSellerUsesCanonicalText) {
  const auto cfg = persuasion(0.5, 1.25, 5, MessageMode::FreeText);
  const auto end = play(cfg, 3, AgentSpec::parse("commitment"), AgentSpec::parse("bayes_buyer"));
  EXPECT_TRUE(end.is_terminal());
}

TEST(SafeDefault, FamilySafeMoves) {
  const auto b = bargaining(0.9, 0.9, 1'000, Horizon::finite(2));
  EXPECT_EQ(safe_default_action(observe(new_game(b, 1), Player::Alice)), Action(ProposeSplit{500, std::nullopt}));
  auto s = apply_action(new_game(b, 1), ProposeSplit{500, std::nullopt});
  EXPECT_EQ(safe_default_action(observe(s, Player::Bob)), Action(Respond{false}));
  const auto n = negotiation(0.8, 1.2, 1'000, Horizon::finite(2));
  EXPECT_EQ(safe_default_action(observe(new_game(n, 1), Player::Alice)), Action(ProposePrice{800, std::nullopt}));
  const auto p = persuasion(0.5, 1.25, 2);
  EXPECT_EQ(safe_default_action(observe(new_game(p, 1), Player::Alice)), Action(SellerSignal{false, std::nullopt}));
  EXPECT_THROW(safe_default_action(observe(new_game(p, 1), Player::Bob)), IllegalAction);
}
