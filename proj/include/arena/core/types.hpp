#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace arena {

enum class GameFamily { Bargaining, Negotiation, Persuasion };
enum class Player { Alice, Bob };

constexpr Player opponent_of(Player p) noexcept {
  return p == Player::Alice ? Player::Bob : Player::Alice;
}

std::string_view to_string(GameFamily family) noexcept;
std::string_view to_string(Player player) noexcept;
// Display name used in prompts ("Alice" / "Bob").
std::string_view display_name(Player player) noexcept;
GameFamily parse_family(std::string_view text);
Player parse_player(std::string_view text);

// Hidden round cap used for "infinite" horizons.
inline constexpr int kDefaultInfiniteCap = 50;

// A finite horizon is announced to the players; an infinite one is a cap
// the engine enforces but never reveals.
struct Horizon {
  bool infinite = false;
  int rounds = 1;

  static Horizon finite(int t) { return Horizon{false, t}; }
  static Horizon unbounded(int cap = kDefaultInfiniteCap) { return Horizon{true, cap}; }

  friend bool operator==(const Horizon&, const Horizon&) = default;
};

struct BargainingConfig {
  double delta_a = 0.9;
  double delta_b = 0.9;
  std::int64_t money = 10'000;
  Horizon horizon = Horizon::unbounded();
  bool complete_info = true;
  bool messages_allowed = false;

  friend bool operator==(const BargainingConfig&, const BargainingConfig&) = default;
};

struct NegotiationConfig {
  double f_a = 1.0;
  double f_b = 1.0;
  std::int64_t money = 10'000;
  Horizon horizon = Horizon::finite(1);
  bool complete_info = true;
  bool messages_allowed = false;

  double value_alice() const noexcept { return static_cast<double>(money) * f_a; }
  double value_bob() const noexcept { return static_cast<double>(money) * f_b; }

  friend bool operator==(const NegotiationConfig&, const NegotiationConfig&) = default;
};

enum class MessageMode { Binary, FreeText };
enum class BuyerMode { LongLiving, Myopic };

std::string_view to_string(MessageMode mode) noexcept;
std::string_view to_string(BuyerMode mode) noexcept;

struct PersuasionConfig {
  double prior_p = 0.5;
  double value_v = 1.25;
  std::int64_t money = 10'000;
  Horizon horizon = Horizon::finite(20);
  bool complete_info = true;
  MessageMode message_mode = MessageMode::Binary;
  BuyerMode buyer_mode = BuyerMode::LongLiving;
  // Overrides the per-game seed for the quality draw when set.
  std::optional<std::uint64_t> rng_seed;

  friend bool operator==(const PersuasionConfig&, const PersuasionConfig&) = default;
};

using FamilyConfig = std::variant<BargainingConfig, NegotiationConfig, PersuasionConfig>;

struct GameConfig {
  FamilyConfig params;
  std::string config_id;

  GameFamily family() const noexcept { return static_cast<GameFamily>(params.index()); }
  const Horizon& horizon() const noexcept;
  std::int64_t money() const noexcept;
  bool complete_info() const noexcept;

  friend bool operator==(const GameConfig&, const GameConfig&) = default;
};

// Throws InvalidConfig when an invariant is violated.
void validate(const GameConfig& config);

// ---- actions ---------------------------------------------------------------

// Splits are integer currency units; Alice's share is alice_amount / M.
struct ProposeSplit {
  std::int64_t alice_amount = 0;
  std::optional<std::string> message;

  friend bool operator==(const ProposeSplit&, const ProposeSplit&) = default;
};

struct ProposePrice {
  std::int64_t price = 0;
  std::optional<std::string> message;

  friend bool operator==(const ProposePrice&, const ProposePrice&) = default;
};

struct Respond {
  bool accept = false;

  friend bool operator==(const Respond&, const Respond&) = default;
};

// Binary mode carries `recommend`; free-text mode carries `text`.
struct SellerSignal {
  std::optional<bool> recommend;
  std::optional<std::string> text;

  friend bool operator==(const SellerSignal&, const SellerSignal&) = default;
};

struct BuyDecision {
  bool buy = false;

  friend bool operator==(const BuyDecision&, const BuyDecision&) = default;
};

using Action = std::variant<ProposeSplit, ProposePrice, Respond, SellerSignal, BuyDecision>;

enum class ActionKind { ProposeSplit, ProposePrice, Respond, SellerSignal, BuyDecision };

constexpr ActionKind kind_of(const Action& action) noexcept {
  return static_cast<ActionKind>(action.index());
}
std::string_view to_string(ActionKind kind) noexcept;
ActionKind parse_action_kind(std::string_view text);

// Free text attached to an action (proposal message or free-text signal).
const std::optional<std::string>& message_of(const Action& action) noexcept;

// ---- outcomes --------------------------------------------------------------

struct BargainingOutcome {
  std::optional<int> agreed_round;  // t_ev; empty means no agreement (t_ev = inf)
  std::int64_t alice_amount = 0;
  double alice_share = 0.0;         // p_ev

  friend bool operator==(const BargainingOutcome&, const BargainingOutcome&) = default;
};

struct NegotiationOutcome {
  std::optional<std::int64_t> price;  // p_ev; empty means no trade
  std::optional<int> agreed_round;

  friend bool operator==(const NegotiationOutcome&, const NegotiationOutcome&) = default;
};

struct PersuasionOutcome {
  int rounds = 0;       // T
  int high_rounds = 0;  // n_ev
  int high_sold = 0;    // k_ev
  int low_unsold = 0;   // r_ev
  int low_sold = 0;

  int buys() const noexcept { return high_sold + low_sold; }

  friend bool operator==(const PersuasionOutcome&, const PersuasionOutcome&) = default;
};

using Outcome = std::variant<BargainingOutcome, NegotiationOutcome, PersuasionOutcome>;

struct MetricSet {
  double efficiency = 0.0;
  double fairness = 0.0;
  double self_gain_alice = 0.0;
  double self_gain_bob = 0.0;
  // Set when a persuasion ratio had an empty denominator and was defined as 1.
  bool efficiency_vacuous = false;
  bool fairness_vacuous = false;

  friend bool operator==(const MetricSet&, const MetricSet&) = default;
};

enum class Metric { Efficiency, Fairness, SelfGainAlice, SelfGainBob };

std::string_view to_string(Metric metric) noexcept;
Metric parse_metric(std::string_view text);
double metric_value(const MetricSet& metrics, Metric metric) noexcept;

}  // namespace arena
