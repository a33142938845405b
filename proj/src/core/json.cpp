#include "arena/core/json.hpp"

#include <type_traits>

#include <fmt/format.h>

#include "arena/errors.hpp"

namespace arena {

namespace {

template <typename T>
T required(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw TranscriptError(fmt::format("missing field '{}'", key));
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw TranscriptError(fmt::format("field '{}': {}", key, e.what()));
  }
}

std::optional<std::string> optional_text(const json& j, const char* key) {
  if (j.contains(key) && !j.at(key).is_null()) return j.at(key).get<std::string>();
  return std::nullopt;
}

json round_or_inf(const std::optional<int>& round) {
  return round ? json(*round) : json("inf");
}

std::optional<int> round_from_json(const json& j) {
  if (j.is_string() && j.get<std::string>() == "inf") return std::nullopt;
  return j.get<int>();
}

}  // namespace

json to_json(const Horizon& horizon) {
  if (horizon.infinite) return json{{"type", "infinite"}, {"cap", horizon.rounds}};
  return json{{"type", "finite"}, {"rounds", horizon.rounds}};
}

Horizon horizon_from_json(const json& j) {
  const auto type = required<std::string>(j, "type");
  if (type == "infinite") return Horizon::unbounded(required<int>(j, "cap"));
  if (type == "finite") return Horizon::finite(required<int>(j, "rounds"));
  throw TranscriptError(fmt::format("unknown horizon type '{}'", type));
}

json to_json(const GameConfig& config) {
  json j;
  j["config_id"] = config.config_id;
  j["family"] = std::string(to_string(config.family()));
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, BargainingConfig>) {
          j["delta_a"] = c.delta_a;
          j["delta_b"] = c.delta_b;
          j["messages_allowed"] = c.messages_allowed;
        } else if constexpr (std::is_same_v<T, NegotiationConfig>) {
          j["f_a"] = c.f_a;
          j["f_b"] = c.f_b;
          j["messages_allowed"] = c.messages_allowed;
        } else {
          j["prior_p"] = c.prior_p;
          j["value_v"] = c.value_v;
          j["message_mode"] = std::string(to_string(c.message_mode));
          j["buyer_mode"] = std::string(to_string(c.buyer_mode));
          if (c.rng_seed) j["rng_seed"] = *c.rng_seed;
        }
        j["money"] = c.money;
        j["horizon"] = to_json(c.horizon);
        j["complete_info"] = c.complete_info;
      },
      config.params);
  return j;
}

GameConfig config_from_json(const json& j) {
  GameConfig config;
  if (j.contains("config_id")) config.config_id = j.at("config_id").get<std::string>();
  const auto family = parse_family(required<std::string>(j, "family"));
  const auto horizon = horizon_from_json(required<json>(j, "horizon"));
  const auto money = required<std::int64_t>(j, "money");
  const auto ci = required<bool>(j, "complete_info");
  switch (family) {
    case GameFamily::Bargaining:
      config.params = BargainingConfig{required<double>(j, "delta_a"), required<double>(j, "delta_b"),
                                       money, horizon, ci, required<bool>(j, "messages_allowed")};
      break;
    case GameFamily::Negotiation:
      config.params = NegotiationConfig{required<double>(j, "f_a"), required<double>(j, "f_b"), money,
                                        horizon, ci, required<bool>(j, "messages_allowed")};
      break;
    case GameFamily::Persuasion: {
      PersuasionConfig p;
      p.prior_p = required<double>(j, "prior_p");
      p.value_v = required<double>(j, "value_v");
      p.money = money;
      p.horizon = horizon;
      p.complete_info = ci;
      const auto mode = required<std::string>(j, "message_mode");
      if (mode != "binary" && mode != "text") {
        throw TranscriptError(fmt::format("unknown message_mode '{}'", mode));
      }
      p.message_mode = mode == "binary" ? MessageMode::Binary : MessageMode::FreeText;
      const auto buyer = required<std::string>(j, "buyer_mode");
      if (buyer != "long_living" && buyer != "myopic") {
        throw TranscriptError(fmt::format("unknown buyer_mode '{}'", buyer));
      }
      p.buyer_mode = buyer == "myopic" ? BuyerMode::Myopic : BuyerMode::LongLiving;
      if (j.contains("rng_seed")) p.rng_seed = j.at("rng_seed").get<std::uint64_t>();
      config.params = p;
      break;
    }
  }
  return config;
}

json to_json(const Action& action, bool with_message) {
  json j;
  j["kind"] = std::string(to_string(kind_of(action)));
  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, ProposeSplit>) {
          j["alice_amount"] = a.alice_amount;
          if (with_message && a.message) j["message"] = *a.message;
        } else if constexpr (std::is_same_v<T, ProposePrice>) {
          j["price"] = a.price;
          if (with_message && a.message) j["message"] = *a.message;
        } else if constexpr (std::is_same_v<T, Respond>) {
          j["accept"] = a.accept;
        } else if constexpr (std::is_same_v<T, SellerSignal>) {
          if (a.recommend) j["recommend"] = *a.recommend;
          if (with_message && a.text) j["text"] = *a.text;
        } else {
          j["buy"] = a.buy;
        }
      },
      action);
  return j;
}

Action action_from_json(const json& j) {
  if (!j.is_object()) throw IllegalAction("action must be a JSON object");
  ActionKind kind;
  try {
    kind = parse_action_kind(required<std::string>(j, "kind"));
  } catch (const TranscriptError& e) {
    throw IllegalAction(e.what());
  }
  try {
    switch (kind) {
      case ActionKind::ProposeSplit:
        return ProposeSplit{j.at("alice_amount").get<std::int64_t>(), optional_text(j, "message")};
      case ActionKind::ProposePrice:
        return ProposePrice{j.at("price").get<std::int64_t>(), optional_text(j, "message")};
      case ActionKind::Respond:
        return Respond{j.at("accept").get<bool>()};
      case ActionKind::SellerSignal: {
        SellerSignal s;
        if (j.contains("recommend") && !j.at("recommend").is_null()) s.recommend = j.at("recommend").get<bool>();
        s.text = optional_text(j, "text");
        return s;
      }
      case ActionKind::BuyDecision:
        return BuyDecision{j.at("buy").get<bool>()};
    }
  } catch (const json::exception& e) {
    throw IllegalAction(fmt::format("malformed {} action: {}", to_string(kind), e.what()));
  }
  throw IllegalAction("unreachable action kind");
}

json to_json(const Outcome& outcome) {
  return std::visit(
      [](const auto& o) -> json {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, BargainingOutcome>) {
          json j{{"t_ev", round_or_inf(o.agreed_round)}};
          if (o.agreed_round) {
            j["p_ev"] = o.alice_share;
            j["alice_amount"] = o.alice_amount;
          } else {
            j["p_ev"] = nullptr;
          }
          return j;
        } else if constexpr (std::is_same_v<T, NegotiationOutcome>) {
          return json{{"t_ev", round_or_inf(o.agreed_round)},
                      {"p_ev", o.price ? json(*o.price) : json(nullptr)}};
        } else {
          return json{{"T", o.rounds},          {"n_ev", o.high_rounds}, {"k_ev", o.high_sold},
                      {"r_ev", o.low_unsold},    {"low_sold", o.low_sold}};
        }
      },
      outcome);
}

Outcome outcome_from_json(GameFamily family, const json& j) {
  switch (family) {
    case GameFamily::Bargaining: {
      BargainingOutcome o;
      o.agreed_round = round_from_json(required<json>(j, "t_ev"));
      if (o.agreed_round) {
        o.alice_share = required<double>(j, "p_ev");
        o.alice_amount = required<std::int64_t>(j, "alice_amount");
      }
      return o;
    }
    case GameFamily::Negotiation: {
      NegotiationOutcome o;
      o.agreed_round = round_from_json(required<json>(j, "t_ev"));
      if (j.contains("p_ev") && !j.at("p_ev").is_null()) o.price = j.at("p_ev").get<std::int64_t>();
      return o;
    }
    case GameFamily::Persuasion:
      return PersuasionOutcome{required<int>(j, "T"), required<int>(j, "n_ev"), required<int>(j, "k_ev"),
                               required<int>(j, "r_ev"), required<int>(j, "low_sold")};
  }
  throw TranscriptError("unknown outcome family");
}

json to_json(const MetricSet& m) {
  json j{{"efficiency", m.efficiency},
         {"fairness", m.fairness},
         {"self_gain_alice", m.self_gain_alice},
         {"self_gain_bob", m.self_gain_bob}};
  if (m.efficiency_vacuous) j["efficiency_vacuous"] = true;
  if (m.fairness_vacuous) j["fairness_vacuous"] = true;
  return j;
}

MetricSet metrics_from_json(const json& j) {
  MetricSet m;
  m.efficiency = required<double>(j, "efficiency");
  m.fairness = required<double>(j, "fairness");
  m.self_gain_alice = required<double>(j, "self_gain_alice");
  m.self_gain_bob = required<double>(j, "self_gain_bob");
  m.efficiency_vacuous = j.value("efficiency_vacuous", false);
  m.fairness_vacuous = j.value("fairness_vacuous", false);
  return m;
}

json to_json(const ActionShape& shape) {
  json j{{"kind", std::string(to_string(shape.kind))},
         {"actor", std::string(to_string(shape.actor))}};
  switch (shape.kind) {
    case ActionKind::ProposeSplit:
    case ActionKind::ProposePrice:
      j["min_amount"] = shape.min_amount;
      j["max_amount"] = shape.max_amount ? json(*shape.max_amount) : json(nullptr);
      j["message_allowed"] = shape.message_allowed;
      break;
    case ActionKind::SellerSignal:
      j["signal_mode"] = std::string(to_string(shape.signal_mode));
      break;
    default:
      break;
  }
  return j;
}

json to_json(const Observation& obs) {
  json j;
  j["role"] = std::string(to_string(obs.role));
  j["family"] = std::string(to_string(obs.family));
  j["round"] = obs.round;
  j["phase"] = std::string(to_string(obs.phase));
  j["turn"] = std::string(to_string(obs.turn));
  j["terminal"] = obs.terminal;
  j["money"] = obs.money;
  if (obs.horizon_rounds) j["horizon_rounds"] = *obs.horizon_rounds;
  j["messages_allowed"] = obs.messages_allowed;
  if (obs.own_discount) j["own_discount"] = *obs.own_discount;
  if (obs.opponent_discount) j["opponent_discount"] = *obs.opponent_discount;
  if (obs.own_value) j["own_value"] = *obs.own_value;
  if (obs.opponent_value) j["opponent_value"] = *obs.opponent_value;
  if (obs.prior_p) j["prior_p"] = *obs.prior_p;
  if (obs.value_v) j["value_v"] = *obs.value_v;
  if (obs.message_mode) j["message_mode"] = std::string(to_string(*obs.message_mode));
  if (obs.buyer_mode) j["buyer_mode"] = std::string(to_string(*obs.buyer_mode));
  if (obs.current_quality) j["current_quality"] = *obs.current_quality ? "high" : "low";
  if (!obs.stats) {
    json history = json::array();
    for (const auto& e : obs.history) {
      json h{{"round", e.round}, {"actor", std::string(to_string(e.actor))}, {"action", to_json(e.action)}};
      if (e.quality) h["quality"] = *e.quality ? "high" : "low";
      history.push_back(std::move(h));
    }
    j["history"] = std::move(history);
  } else {
    j["stats"] = json{{"prior_rounds", obs.stats->prior_rounds},
                      {"bought_fraction", obs.stats->bought_fraction},
                      {"low_bought_fraction", obs.stats->low_bought_fraction}};
  }
  if (obs.pending) j["pending"] = to_json(*obs.pending);
  j["your_turn"] = obs.my_turn();
  if (obs.shape) j["action_shape"] = to_json(*obs.shape);
  return j;
}

}  // namespace arena
