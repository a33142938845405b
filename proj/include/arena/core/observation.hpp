#pragma once

#include <optional>
#include <vector>

#include "arena/core/game.hpp"

namespace arena {

// One history entry as seen by a given player. `quality` is present only
// where that player is entitled to know the realized product quality.
struct VisibleEvent {
  int round = 1;
  Player actor = Player::Alice;
  Action action;
  std::optional<bool> quality;

  friend bool operator==(const VisibleEvent&, const VisibleEvent&) = default;
};

// Aggregate history shown to myopic buyers in place of the full history.
struct MyopicStats {
  int prior_rounds = 0;
  double bought_fraction = 0.0;
  double low_bought_fraction = 0.0;

  friend bool operator==(const MyopicStats&, const MyopicStats&) = default;
};

// What a player sees. Parameters the player is not entitled to are absent
// (std::nullopt), never zero-filled.
struct Observation {
  Player role = Player::Alice;
  GameFamily family = GameFamily::Bargaining;
  int round = 1;
  Phase phase = Phase::AwaitProposal;
  Player turn = Player::Alice;
  bool terminal = false;
  std::int64_t money = 0;
  std::optional<int> horizon_rounds;  // absent for hidden (infinite) horizons
  bool messages_allowed = false;

  // bargaining
  std::optional<double> own_discount;
  std::optional<double> opponent_discount;
  // negotiation
  std::optional<double> own_value;
  std::optional<double> opponent_value;
  // persuasion
  std::optional<double> prior_p;
  std::optional<double> value_v;
  std::optional<MessageMode> message_mode;
  std::optional<BuyerMode> buyer_mode;
  std::optional<bool> current_quality;  // seller, during her signal phase

  std::vector<VisibleEvent> history;  // empty for myopic buyers
  std::optional<MyopicStats> stats;   // myopic buyers only
  std::optional<Action> pending;      // offer or signal awaiting a reply
  std::optional<ActionShape> shape;   // present when it is `role`'s turn

  bool my_turn() const noexcept { return shape.has_value(); }
};

Observation observe(const GameState& state, Player role);

}  // namespace arena
