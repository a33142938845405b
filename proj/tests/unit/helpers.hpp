#pragma once

#include <memory>
#include <vector>

#include "arena/agents/agent.hpp"
#include "arena/core/game.hpp"
#include "arena/core/observation.hpp"

namespace arena::testing {

inline GameConfig bargaining(double da, double db, std::int64_t money, Horizon horizon, bool ci = true,
                             bool ma = false) {
  return GameConfig{BargainingConfig{da, db, money, horizon, ci, ma}, "test"};
}

inline GameConfig negotiation(double fa, double fb, std::int64_t money, Horizon horizon, bool ci = true,
                              bool ma = false) {
  return GameConfig{NegotiationConfig{fa, fb, money, horizon, ci, ma}, "test"};
}

inline GameConfig persuasion(double p, double v, int rounds, MessageMode mm = MessageMode::Binary,
                             BuyerMode bm = BuyerMode::LongLiving, bool ci = true, std::int64_t money = 10'000) {
  return GameConfig{PersuasionConfig{p, v, money, Horizon::finite(rounds), ci, mm, bm, std::nullopt}, "test"};
}

// Drives two agents to the end of the game.
inline GameState play(const GameConfig& config, std::uint64_t seed, Agent& alice, Agent& bob) {
  auto state = new_game(config, seed);
  while (!state.is_terminal()) {
    auto& agent = state.turn == Player::Alice ? alice : bob;
    state = apply_action(state, agent.act(observe(state, state.turn)));
  }
  return state;
}

inline GameState play(const GameConfig& config, std::uint64_t seed, const AgentSpec& a, const AgentSpec& b) {
  auto alice = make_scripted_agent(a, config.family(), Player::Alice, seed);
  auto bob = make_scripted_agent(b, config.family(), Player::Bob, seed + 1);
  return play(config, seed, *alice, *bob);
}

}  // namespace arena::testing
