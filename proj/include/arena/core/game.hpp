#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "arena/core/types.hpp"

namespace arena {

enum class Phase { AwaitProposal, AwaitResponse, AwaitSignal, AwaitBuy };

std::string_view to_string(Phase phase) noexcept;

struct Event {
  int round = 1;
  Player actor = Player::Alice;
  Action action;

  friend bool operator==(const Event&, const Event&) = default;
};

// The single action shape permitted in a non-terminal state, with bounds.
struct ActionShape {
  ActionKind kind = ActionKind::ProposeSplit;
  Player actor = Player::Alice;
  std::int64_t min_amount = 0;
  std::optional<std::int64_t> max_amount;  // empty: unbounded above
  bool message_allowed = false;
  MessageMode signal_mode = MessageMode::Binary;
};

// Immutable snapshot of one game. apply_action returns a new value.
struct GameState {
  GameConfig config;
  std::uint64_t seed = 0;
  int round = 1;
  Player turn = Player::Alice;
  Phase phase = Phase::AwaitProposal;
  std::optional<Action> pending;       // offer or signal awaiting a reply
  std::vector<bool> qualities;         // persuasion: true = high quality
  std::vector<Event> history;
  std::optional<Outcome> terminal;

  // Running persuasion counters.
  int high_sold = 0;
  int low_unsold = 0;
  int low_sold = 0;

  bool is_terminal() const noexcept { return terminal.has_value(); }
};

// Proposer of a bargaining / negotiation round: Alice on odd rounds.
constexpr Player proposer_of(int round) noexcept {
  return round % 2 == 1 ? Player::Alice : Player::Bob;
}

// Pre-draws persuasion qualities i.i.d. Bernoulli(p) from `seed`.
std::vector<bool> draw_qualities(double prior_p, int rounds, std::uint64_t seed);

GameState new_game(const GameConfig& config, std::uint64_t seed);
ActionShape legal_actions(const GameState& state);
GameState apply_action(const GameState& state, const Action& action);

// Reconstructs the state reached by `events` from a fresh game.
GameState replay(const GameConfig& config, std::uint64_t seed, const std::vector<Event>& events);

MetricSet bargaining_metrics(const BargainingOutcome& outcome, const BargainingConfig& config);
MetricSet negotiation_metrics(const NegotiationOutcome& outcome, const NegotiationConfig& config);
MetricSet persuasion_metrics(const PersuasionOutcome& outcome, const PersuasionConfig& config);
MetricSet compute_metrics(const Outcome& outcome, const GameConfig& config);

}  // namespace arena
