#include "arena/core/observation.hpp"

#include <type_traits>

namespace arena {

namespace {

void fill_bargaining(Observation& obs, const BargainingConfig& cfg) {
  const bool alice = obs.role == Player::Alice;
  obs.own_discount = alice ? cfg.delta_a : cfg.delta_b;
  if (cfg.complete_info) obs.opponent_discount = alice ? cfg.delta_b : cfg.delta_a;
  obs.messages_allowed = cfg.messages_allowed;
}

void fill_negotiation(Observation& obs, const NegotiationConfig& cfg) {
  const bool alice = obs.role == Player::Alice;
  obs.own_value = alice ? cfg.value_alice() : cfg.value_bob();
  if (cfg.complete_info) obs.opponent_value = alice ? cfg.value_bob() : cfg.value_alice();
  obs.messages_allowed = cfg.messages_allowed;
}

void fill_persuasion(Observation& obs, const PersuasionConfig& cfg, const GameState& state) {
  obs.prior_p = cfg.prior_p;
  obs.message_mode = cfg.message_mode;
  obs.buyer_mode = cfg.buyer_mode;
  obs.messages_allowed = cfg.message_mode == MessageMode::FreeText;
  // The buyer always knows his own valuation; the seller only under complete information.
  if (obs.role == Player::Bob || cfg.complete_info) obs.value_v = cfg.value_v;
  if (obs.role == Player::Alice && !state.is_terminal() && state.phase == Phase::AwaitSignal) {
    obs.current_quality = state.qualities.at(static_cast<std::size_t>(state.round - 1));
  }
}

std::vector<VisibleEvent> visible_history(const GameState& state, Player role) {
  std::vector<VisibleEvent> out;
  out.reserve(state.history.size());
  const bool persuasion = state.config.family() == GameFamily::Persuasion;
  for (const auto& e : state.history) {
    VisibleEvent v{e.round, e.actor, e.action, std::nullopt};
    if (persuasion) {
      const bool quality = state.qualities.at(static_cast<std::size_t>(e.round - 1));
      if (role == Player::Alice) {
        v.quality = quality;
      } else if (const auto* buy = std::get_if<BuyDecision>(&e.action); buy && buy->buy) {
        v.quality = quality;
      }
    }
    out.push_back(std::move(v));
  }
  return out;
}

MyopicStats myopic_stats(const GameState& state) {
  MyopicStats s;
  int bought = 0;
  int low_bought = 0;
  for (const auto& e : state.history) {
    const auto* buy = std::get_if<BuyDecision>(&e.action);
    if (buy == nullptr) continue;
    ++s.prior_rounds;
    if (buy->buy) {
      ++bought;
      if (!state.qualities.at(static_cast<std::size_t>(e.round - 1))) ++low_bought;
    }
  }
  if (s.prior_rounds > 0) {
    s.bought_fraction = static_cast<double>(bought) / s.prior_rounds;
    s.low_bought_fraction = static_cast<double>(low_bought) / s.prior_rounds;
  }
  return s;
}

}  // namespace

Observation observe(const GameState& state, Player role) {
  Observation obs;
  obs.role = role;
  obs.family = state.config.family();
  obs.round = state.round;
  obs.phase = state.phase;
  obs.turn = state.turn;
  obs.terminal = state.is_terminal();
  obs.money = state.config.money();
  const auto& horizon = state.config.horizon();
  if (!horizon.infinite) obs.horizon_rounds = horizon.rounds;

  std::visit(
      [&](const auto& cfg) {
        using T = std::decay_t<decltype(cfg)>;
        if constexpr (std::is_same_v<T, BargainingConfig>) {
          fill_bargaining(obs, cfg);
        } else if constexpr (std::is_same_v<T, NegotiationConfig>) {
          fill_negotiation(obs, cfg);
        } else {
          fill_persuasion(obs, cfg, state);
        }
      },
      state.config.params);

  const bool myopic_buyer = obs.family == GameFamily::Persuasion && role == Player::Bob &&
                            obs.buyer_mode == BuyerMode::Myopic;
  if (myopic_buyer) {
    obs.stats = myopic_stats(state);
  } else {
    obs.history = visible_history(state, role);
  }
  obs.pending = state.pending;
  if (!state.is_terminal() && state.turn == role) obs.shape = legal_actions(state);
  return obs;
}

}  // namespace arena
