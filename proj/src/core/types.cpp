#include "arena/core/types.hpp"

#include <cmath>
#include <type_traits>

#include <fmt/format.h>

#include "arena/errors.hpp"

namespace arena {

std::string_view to_string(GameFamily family) noexcept {
  switch (family) {
    case GameFamily::Bargaining: return "bargaining";
    case GameFamily::Negotiation: return "negotiation";
    case GameFamily::Persuasion: return "persuasion";
  }
  return "?";
}

std::string_view to_string(Player player) noexcept {
  return player == Player::Alice ? "alice" : "bob";
}

std::string_view display_name(Player player) noexcept {
  return player == Player::Alice ? "Alice" : "Bob";
}

GameFamily parse_family(std::string_view text) {
  if (text == "bargaining") return GameFamily::Bargaining;
  if (text == "negotiation") return GameFamily::Negotiation;
  if (text == "persuasion") return GameFamily::Persuasion;
  throw InvalidConfig(fmt::format("unknown game family '{}'", text));
}

Player parse_player(std::string_view text) {
  if (text == "alice" || text == "Alice") return Player::Alice;
  if (text == "bob" || text == "Bob") return Player::Bob;
  throw InvalidConfig(fmt::format("unknown player '{}'", text));
}

std::string_view to_string(MessageMode mode) noexcept {
  return mode == MessageMode::Binary ? "binary" : "text";
}

std::string_view to_string(BuyerMode mode) noexcept {
  return mode == BuyerMode::LongLiving ? "long_living" : "myopic";
}

const Horizon& GameConfig::horizon() const noexcept {
  return std::visit([](const auto& c) -> const Horizon& { return c.horizon; }, params);
}

std::int64_t GameConfig::money() const noexcept {
  return std::visit([](const auto& c) { return c.money; }, params);
}

bool GameConfig::complete_info() const noexcept {
  return std::visit([](const auto& c) { return c.complete_info; }, params);
}

namespace {

void check_horizon(const Horizon& h) {
  if (h.rounds < 1) {
    throw InvalidConfig(fmt::format("horizon must have at least one round, got {}", h.rounds));
  }
}

void check_money(std::int64_t money) {
  if (money <= 0) throw InvalidConfig(fmt::format("money must be positive, got {}", money));
}

void check_discount(double delta, std::string_view name) {
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw InvalidConfig(fmt::format("{} must lie in (0, 1], got {}", name, delta));
  }
}

}  // namespace

void validate(const GameConfig& config) {
  std::visit(
      [](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        check_horizon(c.horizon);
        check_money(c.money);
        if constexpr (std::is_same_v<T, BargainingConfig>) {
          check_discount(c.delta_a, "delta_a");
          check_discount(c.delta_b, "delta_b");
        } else if constexpr (std::is_same_v<T, NegotiationConfig>) {
          if (!(c.f_a > 0.0) || !std::isfinite(c.f_a) || !(c.f_b > 0.0) || !std::isfinite(c.f_b)) {
            throw InvalidConfig(
                fmt::format("valuation factors must be positive, got ({}, {})", c.f_a, c.f_b));
          }
        } else {
          if (!(c.prior_p > 0.0 && c.prior_p < 1.0)) {
            throw InvalidConfig(fmt::format("prior_p must lie in (0, 1), got {}", c.prior_p));
          }
          if (!(c.value_v > 1.0) || !std::isfinite(c.value_v)) {
            throw InvalidConfig(fmt::format("value_v must exceed 1, got {}", c.value_v));
          }
        }
      },
      config.params);
}

std::string_view to_string(ActionKind kind) noexcept {
  switch (kind) {
    case ActionKind::ProposeSplit: return "propose_split";
    case ActionKind::ProposePrice: return "propose_price";
    case ActionKind::Respond: return "respond";
    case ActionKind::SellerSignal: return "seller_signal";
    case ActionKind::BuyDecision: return "buy_decision";
  }
  return "?";
}

ActionKind parse_action_kind(std::string_view text) {
  for (auto k : {ActionKind::ProposeSplit, ActionKind::ProposePrice, ActionKind::Respond,
                 ActionKind::SellerSignal, ActionKind::BuyDecision}) {
    if (to_string(k) == text) return k;
  }
  throw IllegalAction(fmt::format("unknown action kind '{}'", text));
}

const std::optional<std::string>& message_of(const Action& action) noexcept {
  static const std::optional<std::string> none;
  if (const auto* s = std::get_if<ProposeSplit>(&action)) return s->message;
  if (const auto* p = std::get_if<ProposePrice>(&action)) return p->message;
  if (const auto* g = std::get_if<SellerSignal>(&action)) return g->text;
  return none;
}

std::string_view to_string(Metric metric) noexcept {
  switch (metric) {
    case Metric::Efficiency: return "efficiency";
    case Metric::Fairness: return "fairness";
    case Metric::SelfGainAlice: return "self_gain_alice";
    case Metric::SelfGainBob: return "self_gain_bob";
  }
  return "?";
}

Metric parse_metric(std::string_view text) {
  for (auto m : {Metric::Efficiency, Metric::Fairness, Metric::SelfGainAlice, Metric::SelfGainBob}) {
    if (to_string(m) == text) return m;
  }
  throw InvalidConfig(fmt::format("unknown metric '{}'", text));
}

double metric_value(const MetricSet& metrics, Metric metric) noexcept {
  switch (metric) {
    case Metric::Efficiency: return metrics.efficiency;
    case Metric::Fairness: return metrics.fairness;
    case Metric::SelfGainAlice: return metrics.self_gain_alice;
    case Metric::SelfGainBob: return metrics.self_gain_bob;
  }
  return 0.0;
}

}  // namespace arena
