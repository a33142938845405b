#include "arena/core/game.hpp"

#include <cmath>
#include <type_traits>

#include <fmt/format.h>

#include "arena/errors.hpp"
#include "arena/util/rng.hpp"

namespace arena {

std::string_view to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::AwaitProposal: return "await_proposal";
    case Phase::AwaitResponse: return "await_response";
    case Phase::AwaitSignal: return "await_signal";
    case Phase::AwaitBuy: return "await_buy";
  }
  return "?";
}

std::vector<bool> draw_qualities(double prior_p, int rounds, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<bool> out(static_cast<std::size_t>(rounds));
  for (auto&& q : out) q = bernoulli(rng, prior_p);
  return out;
}

GameState new_game(const GameConfig& config, std::uint64_t seed) {
  validate(config);
  GameState state;
  state.config = config;
  state.seed = seed;
  state.round = 1;
  state.turn = Player::Alice;
  if (const auto* p = std::get_if<PersuasionConfig>(&config.params)) {
    state.phase = Phase::AwaitSignal;
    state.qualities = draw_qualities(p->prior_p, p->horizon.rounds, p->rng_seed.value_or(seed));
  } else {
    state.phase = Phase::AwaitProposal;
  }
  return state;
}

ActionShape legal_actions(const GameState& state) {
  if (state.is_terminal()) throw GameOver("game is over");
  ActionShape shape;
  shape.actor = state.turn;
  const auto money = state.config.money();
  switch (state.phase) {
    case Phase::AwaitProposal:
      if (state.config.family() == GameFamily::Bargaining) {
        shape.kind = ActionKind::ProposeSplit;
        shape.max_amount = money;
        shape.message_allowed = std::get<BargainingConfig>(state.config.params).messages_allowed;
      } else {
        shape.kind = ActionKind::ProposePrice;
        shape.message_allowed = std::get<NegotiationConfig>(state.config.params).messages_allowed;
      }
      break;
    case Phase::AwaitResponse:
      shape.kind = ActionKind::Respond;
      break;
    case Phase::AwaitSignal: {
      const auto& cfg = std::get<PersuasionConfig>(state.config.params);
      shape.kind = ActionKind::SellerSignal;
      shape.signal_mode = cfg.message_mode;
      shape.message_allowed = cfg.message_mode == MessageMode::FreeText;
      break;
    }
    case Phase::AwaitBuy:
      shape.kind = ActionKind::BuyDecision;
      break;
  }
  return shape;
}

namespace {

void check_message(const std::optional<std::string>& message, bool allowed) {
  if (message && !allowed) {
    throw MessageNotAllowed("messages are not allowed in this game");
  }
}

// Closes a reject in an alternating-offers game: next round or no agreement.
void advance_after_reject(GameState& next) {
  if (next.round >= next.config.horizon().rounds) {
    if (next.config.family() == GameFamily::Bargaining) {
      next.terminal = BargainingOutcome{};
    } else {
      next.terminal = NegotiationOutcome{};
    }
    return;
  }
  next.round += 1;
  next.turn = proposer_of(next.round);
  next.phase = Phase::AwaitProposal;
}

void apply_respond(GameState& next, const Respond& respond) {
  const auto& offer = *next.pending;
  if (respond.accept) {
    if (const auto* split = std::get_if<ProposeSplit>(&offer)) {
      BargainingOutcome out;
      out.agreed_round = next.round;
      out.alice_amount = split->alice_amount;
      out.alice_share = static_cast<double>(split->alice_amount) /
                        static_cast<double>(next.config.money());
      next.terminal = out;
    } else {
      const auto& price = std::get<ProposePrice>(offer);
      next.terminal = NegotiationOutcome{price.price, next.round};
    }
    next.pending.reset();
    return;
  }
  next.pending.reset();
  advance_after_reject(next);
}

void apply_buy(GameState& next, const BuyDecision& decision) {
  const bool high = next.qualities.at(static_cast<std::size_t>(next.round - 1));
  if (decision.buy) {
    if (high) ++next.high_sold; else ++next.low_sold;
  } else if (!high) {
    ++next.low_unsold;
  }
  next.pending.reset();
  const int rounds = next.config.horizon().rounds;
  if (next.round >= rounds) {
    PersuasionOutcome out;
    out.rounds = rounds;
    for (bool q : next.qualities) out.high_rounds += q ? 1 : 0;
    out.high_sold = next.high_sold;
    out.low_unsold = next.low_unsold;
    out.low_sold = next.low_sold;
    next.terminal = out;
    return;
  }
  next.round += 1;
  next.turn = Player::Alice;
  next.phase = Phase::AwaitSignal;
}

[[noreturn]] void wrong_kind(const ActionShape& shape, const Action& action) {
  throw IllegalAction(fmt::format("expected {} from {}, got {}", to_string(shape.kind),
                                  to_string(shape.actor), to_string(kind_of(action))));
}

}  // namespace

GameState apply_action(const GameState& state, const Action& action) {
  const ActionShape shape = legal_actions(state);
  if (kind_of(action) != shape.kind) wrong_kind(shape, action);

  GameState next = state;
  switch (shape.kind) {
    case ActionKind::ProposeSplit: {
      const auto& split = std::get<ProposeSplit>(action);
      if (split.alice_amount < 0 || split.alice_amount > *shape.max_amount) {
        throw IllegalAction(fmt::format("split amount {} outside [0, {}]", split.alice_amount,
                                        *shape.max_amount));
      }
      check_message(split.message, shape.message_allowed);
      next.pending = action;
      next.phase = Phase::AwaitResponse;
      next.turn = opponent_of(state.turn);
      break;
    }
    case ActionKind::ProposePrice: {
      const auto& price = std::get<ProposePrice>(action);
      if (price.price < 0) {
        throw IllegalAction(fmt::format("price {} is negative", price.price));
      }
      check_message(price.message, shape.message_allowed);
      next.pending = action;
      next.phase = Phase::AwaitResponse;
      next.turn = opponent_of(state.turn);
      break;
    }
    case ActionKind::Respond:
      apply_respond(next, std::get<Respond>(action));
      break;
    case ActionKind::SellerSignal: {
      const auto& signal = std::get<SellerSignal>(action);
      if (shape.signal_mode == MessageMode::Binary) {
        if (!signal.recommend) throw IllegalAction("binary signal requires a recommend flag");
        check_message(signal.text, false);
      } else {
        if (!signal.text) throw IllegalAction("free-text signal requires text");
        if (signal.recommend) throw IllegalAction("free-text signal carries text, not a flag");
      }
      next.pending = action;
      next.phase = Phase::AwaitBuy;
      next.turn = Player::Bob;
      break;
    }
    case ActionKind::BuyDecision:
      apply_buy(next, std::get<BuyDecision>(action));
      break;
  }
  next.history.push_back(Event{state.round, state.turn, action});
  return next;
}

GameState replay(const GameConfig& config, std::uint64_t seed, const std::vector<Event>& events) {
  GameState state = new_game(config, seed);
  for (const auto& e : events) {
    if (e.round != state.round || e.actor != state.turn) {
      throw IllegalAction(fmt::format("replayed event (round {}, {}) does not match state (round {}, {})",
                                      e.round, to_string(e.actor), state.round, to_string(state.turn)));
    }
    state = apply_action(state, e.action);
  }
  return state;
}

MetricSet bargaining_metrics(const BargainingOutcome& outcome, const BargainingConfig& config) {
  MetricSet m;
  if (!outcome.agreed_round) {
    m.efficiency = 0.0;
    m.fairness = 1.0;
    return m;
  }
  const int t = *outcome.agreed_round;
  // Work from integer amounts so efficiency is exactly 1 at t = 1 and
  // fairness is exactly symmetric under a <-> M - a.
  const auto money = static_cast<double>(config.money);
  const auto alice = static_cast<double>(outcome.alice_amount);
  const auto bob = static_cast<double>(config.money - outcome.alice_amount);
  const double da = std::pow(config.delta_a, t - 1);
  const double db = std::pow(config.delta_b, t - 1);
  m.self_gain_alice = da * alice / money;
  m.self_gain_bob = db * bob / money;
  m.efficiency = (da * alice + db * bob) / money;
  const double dev = (alice - bob) / money;  // 2p - 1
  m.fairness = 1.0 - dev * dev;
  return m;
}

MetricSet negotiation_metrics(const NegotiationOutcome& outcome, const NegotiationConfig& config) {
  MetricSet m;
  const double va = config.value_alice();
  const double vb = config.value_bob();
  if (!outcome.price) {
    m.fairness = 1.0;
    m.efficiency = va >= vb ? 1.0 : 0.0;
    return m;
  }
  const double price = static_cast<double>(*outcome.price);
  const double scale = static_cast<double>(config.money);
  const double fair_price = (va + vb) / 2.0;
  const double dev = (price - fair_price) / scale;
  m.fairness = 1.0 - 4.0 * dev * dev;
  m.efficiency = (va <= price && price <= vb) ? 1.0 : 0.0;
  m.self_gain_alice = (price - va) / scale;
  m.self_gain_bob = (vb - price) / scale;
  return m;
}

MetricSet persuasion_metrics(const PersuasionOutcome& outcome, const PersuasionConfig& config) {
  MetricSet m;
  const double rounds = static_cast<double>(outcome.rounds);
  const int low_rounds = outcome.rounds - outcome.high_rounds;
  if (outcome.high_rounds == 0) {
    m.efficiency = 1.0;
    m.efficiency_vacuous = true;
  } else {
    m.efficiency = static_cast<double>(outcome.high_sold) / outcome.high_rounds;
  }
  if (low_rounds == 0) {
    m.fairness = 1.0;
    m.fairness_vacuous = true;
  } else {
    m.fairness = static_cast<double>(outcome.low_unsold) / low_rounds;
  }
  if (outcome.rounds > 0) {
    m.self_gain_alice = outcome.buys() / rounds;
    m.self_gain_bob =
        (outcome.high_sold * (config.value_v - 1.0) - outcome.low_sold) / rounds;
  }
  return m;
}

MetricSet compute_metrics(const Outcome& outcome, const GameConfig& config) {
  if (outcome.index() != config.params.index()) {
    throw InvalidConfig("outcome family does not match config family");
  }
  return std::visit(
      [&](const auto& out) -> MetricSet {
        using T = std::decay_t<decltype(out)>;
        if constexpr (std::is_same_v<T, BargainingOutcome>) {
          return bargaining_metrics(out, std::get<BargainingConfig>(config.params));
        } else if constexpr (std::is_same_v<T, NegotiationOutcome>) {
          return negotiation_metrics(out, std::get<NegotiationConfig>(config.params));
        } else {
          return persuasion_metrics(out, std::get<PersuasionConfig>(config.params));
        }
      },
      outcome);
}

}  // namespace arena
