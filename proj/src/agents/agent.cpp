#include "arena/agents/agent.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "arena/errors.hpp"
#include "arena/util/rng.hpp"

namespace arena {

namespace {

struct KindInfo {
  AgentKind kind;
  std::string_view name;
  int max_params;
  bool param_required;
};

constexpr std::array<KindInfo, 11> kKinds{{
    {AgentKind::Random, "random", 1, false},
    {AgentKind::AlwaysAccept, "accept", 0, false},
    {AgentKind::FixedSplit, "fixed_split", 1, true},
    {AgentKind::FixedPrice, "fixed_price", 1, true},
    {AgentKind::RubinsteinSpe, "spe", 0, false},
    {AgentKind::BackwardInduction, "bi", 0, false},
    {AgentKind::CommitmentSeller, "commitment", 1, false},
    {AgentKind::BayesianBuyer, "bayes_buyer", 1, false},
    {AgentKind::Midpoint, "midpoint", 0, false},
    {AgentKind::Llm, "llm", 1, true},
    {AgentKind::Human, "human", 1, false},
}};

const KindInfo* find_kind(std::string_view name) {
  for (const auto& k : kKinds) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

const KindInfo& info_of(AgentKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k;
  }
  throw InvalidAgentSpec("unknown agent kind");
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view text, std::string_view what) {
  try {
    std::size_t used = 0;
    const std::string s(text);
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw InvalidAgentSpec(fmt::format("{}: '{}' is not a number", what, text));
  }
}

AgentSpec build_spec(const KindInfo& info, std::optional<std::string_view> param) {
  AgentSpec spec;
  spec.kind = info.kind;
  if (info.param_required && !param) {
    throw InvalidAgentSpec(fmt::format("agent '{}' requires a parameter", info.name));
  }
  if (!param) return spec;
  if (info.max_params == 0) {
    throw InvalidAgentSpec(fmt::format("agent '{}' takes no parameter", info.name));
  }
  switch (info.kind) {
    case AgentKind::Random: {
      std::uint64_t seed = 0;
      const auto [ptr, ec] = std::from_chars(param->data(), param->data() + param->size(), seed);
      if (ec != std::errc() || ptr != param->data() + param->size()) {
        throw InvalidAgentSpec(fmt::format("random: bad seed '{}'", *param));
      }
      spec.seed = seed;
      break;
    }
    case AgentKind::FixedSplit: {
      const double v = parse_double(*param, "fixed_split");
      if (v < 0.0 || v > 1.0) throw InvalidAgentSpec(fmt::format("fixed_split share {} outside [0, 1]", v));
      spec.value = v;
      break;
    }
    case AgentKind::FixedPrice: {
      const double v = parse_double(*param, "fixed_price");
      if (v < 0.0) throw InvalidAgentSpec(fmt::format("fixed_price {} is negative", v));
      spec.value = v;
      break;
    }
    case AgentKind::CommitmentSeller: {
      const double v = parse_double(*param, "commitment");
      if (!(v > 1.0)) throw InvalidAgentSpec(fmt::format("commitment assumed value {} must exceed 1", v));
      spec.value = v;
      break;
    }
    case AgentKind::BayesianBuyer:
      if (*param == "buy") {
        spec.tie_break = TieBreak::Buy;
      } else if (*param == "reject") {
        spec.tie_break = TieBreak::Reject;
      } else {
        throw InvalidAgentSpec(fmt::format("bayes_buyer tie-break must be buy|reject, got '{}'", *param));
      }
      break;
    case AgentKind::Llm:
    case AgentKind::Human:
      if (param->empty()) throw InvalidAgentSpec(fmt::format("agent '{}' needs a non-empty reference", info.name));
      spec.ref = std::string(*param);
      break;
    default:
      break;
  }
  return spec;
}

}  // namespace

AgentSpec AgentSpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  const auto name = text.substr(0, colon);
  const auto* info = find_kind(name);
  if (info == nullptr) throw InvalidAgentSpec(fmt::format("unknown agent kind '{}'", name));
  std::optional<std::string_view> param;
  if (colon != std::string_view::npos) param = text.substr(colon + 1);
  return build_spec(*info, param);
}

std::string AgentSpec::to_string() const {
  const auto& info = info_of(kind);
  std::string out(info.name);
  switch (kind) {
    case AgentKind::Random:
      if (seed) out += fmt::format(":{}", *seed);
      break;
    case AgentKind::FixedSplit:
    case AgentKind::FixedPrice:
    case AgentKind::CommitmentSeller:
      if (value) out += fmt::format(":{}", *value);
      break;
    case AgentKind::BayesianBuyer:
      if (tie_break == TieBreak::Reject) out += ":reject";
      break;
    case AgentKind::Llm:
    case AgentKind::Human:
      if (!ref.empty()) out += ":" + ref;
      break;
    default:
      break;
  }
  return out;
}

std::pair<AgentSpec, AgentSpec> parse_agent_pair(std::string_view text) {
  if (text.find(',') != std::string_view::npos) {
    const auto parts = split(text, ',');
    if (parts.size() != 2) throw InvalidAgentSpec(fmt::format("pair '{}' must name exactly two agents", text));
    return {AgentSpec::parse(parts[0]), AgentSpec::parse(parts[1])};
  }
  const auto tokens = split(text, ':');
  std::vector<AgentSpec> specs;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const auto* info = find_kind(tokens[i]);
    if (info == nullptr) throw InvalidAgentSpec(fmt::format("unknown agent kind '{}' in pair '{}'", tokens[i], text));
    std::optional<std::string_view> param;
    if (info->max_params > 0 && i + 1 < tokens.size() &&
        (info->param_required || find_kind(tokens[i + 1]) == nullptr)) {
      param = tokens[i + 1];
      i += 2;
    } else {
      i += 1;
    }
    specs.push_back(build_spec(*info, param));
  }
  if (specs.size() != 2) throw InvalidAgentSpec(fmt::format("pair '{}' must name exactly two agents", text));
  return {specs[0], specs[1]};
}

std::vector<AgentSpec> parse_agent_list(std::string_view text) {
  std::vector<AgentSpec> out;
  for (auto part : split(text, ',')) {
    if (!part.empty()) out.push_back(AgentSpec::parse(part));
  }
  return out;
}

void check_compatible(const AgentSpec& spec, GameFamily family, Player role) {
  bool ok = true;
  switch (spec.kind) {
    case AgentKind::FixedSplit:
    case AgentKind::RubinsteinSpe:
    case AgentKind::BackwardInduction:
      ok = family == GameFamily::Bargaining;
      break;
    case AgentKind::FixedPrice:
    case AgentKind::Midpoint:
      ok = family == GameFamily::Negotiation;
      break;
    case AgentKind::CommitmentSeller:
      ok = family == GameFamily::Persuasion && role == Player::Alice;
      break;
    case AgentKind::BayesianBuyer:
      ok = family == GameFamily::Persuasion && role == Player::Bob;
      break;
    default:
      break;
  }
  if (!ok) {
    throw UnsupportedFamily(fmt::format("agent '{}' cannot play {} in {} games", spec.to_string(),
                                        to_string(role), to_string(family)));
  }
}

namespace {

std::int64_t own_units_offered(const Observation& obs) {
  const auto& split = std::get<ProposeSplit>(*obs.pending);
  return obs.role == Player::Alice ? split.alice_amount : obs.money - split.alice_amount;
}

ProposeSplit split_giving_self(const Observation& obs, std::int64_t own_units) {
  own_units = std::clamp<std::int64_t>(own_units, 0, obs.money);
  return ProposeSplit{obs.role == Player::Alice ? own_units : obs.money - own_units, std::nullopt};
}

bool signal_recommends(const Action& action) {
  const auto& s = std::get<SellerSignal>(action);
  if (s.recommend) return *s.recommend;
  return s.text && *s.text == kRecommendText;
}

SellerSignal make_signal(const Observation& obs, bool recommend) {
  SellerSignal s;
  if (obs.shape && obs.shape->signal_mode == MessageMode::FreeText) {
    s.text = std::string(recommend ? kRecommendText : kNoRecommendText);
  } else {
    s.recommend = recommend;
  }
  return s;
}

std::int64_t own_value_units(const Observation& obs, bool seller) {
  const double v = *obs.own_value;
  return static_cast<std::int64_t>(seller ? std::ceil(v) : std::floor(v));
}

// ---------------------------------------------------------------------------

class RandomAgent final : public Agent {
 public:
  explicit RandomAgent(std::uint64_t seed) : rng_(seed) {}

  Action act(const Observation& obs) override {
    switch (obs.shape->kind) {
      case ActionKind::ProposeSplit:
        return ProposeSplit{uniform_int(rng_, 0, obs.money), std::nullopt};
      case ActionKind::ProposePrice:
        return ProposePrice{uniform_int(rng_, 0, 2 * obs.money), std::nullopt};
      case ActionKind::Respond:
        return Respond{bernoulli(rng_, 0.5)};
      case ActionKind::SellerSignal:
        return make_signal(obs, bernoulli(rng_, 0.5));
      case ActionKind::BuyDecision:
        return BuyDecision{bernoulli(rng_, 0.5)};
    }
    throw IllegalAction("unreachable");
  }

 private:
  Rng rng_;
};

class AlwaysAcceptAgent final : public Agent {
 public:
  Action act(const Observation& obs) override {
    switch (obs.shape->kind) {
      case ActionKind::ProposeSplit:
        return split_giving_self(obs, obs.money / 2);
      case ActionKind::ProposePrice:
        return ProposePrice{own_value_units(obs, obs.role == Player::Alice), std::nullopt};
      case ActionKind::Respond:
        return Respond{true};
      case ActionKind::SellerSignal:
        return make_signal(obs, true);
      case ActionKind::BuyDecision:
        return BuyDecision{true};
    }
    throw IllegalAction("unreachable");
  }
};

// Demands a fixed fraction of the pie: proposes it and accepts any offer that
// leaves at least that fraction.
class FixedSplitAgent final : public Agent {
 public:
  explicit FixedSplitAgent(double share) : share_(share) {}

  Action act(const Observation& obs) override {
    const auto demand = static_cast<std::int64_t>(std::llround(share_ * static_cast<double>(obs.money)));
    if (obs.shape->kind == ActionKind::ProposeSplit) return split_giving_self(obs, demand);
    return Respond{own_units_offered(obs) >= demand};
  }

 private:
  double share_;
};

// Stationary Rubinstein strategy (`spe`) or finite-horizon backward induction
// (`bi`, stationary when the horizon is hidden). Both work on integer units:
// the responder's continuation is rounded to the nearest unit, proposers offer
// exactly that and responders accept anything at or above it.
class BargainingEquilibriumAgent final : public Agent {
 public:
  explicit BargainingEquilibriumAgent(bool use_horizon) : use_horizon_(use_horizon) {}

  Action act(const Observation& obs) override {
    const double own = *obs.own_discount;
    const double opp = obs.opponent_discount.value_or(own);
    delta_a_ = obs.role == Player::Alice ? own : opp;
    delta_b_ = obs.role == Player::Alice ? opp : own;

    if (obs.shape->kind == ActionKind::ProposeSplit) {
      const auto give = continuation_units(obs, opponent_of(obs.role));
      return split_giving_self(obs, obs.money - give);
    }
    return Respond{own_units_offered(obs) >= continuation_units(obs, obs.role)};
  }

 private:
  // Value, in units of this round's money, of rejecting for `responder`.
  std::int64_t continuation_units(const Observation& obs, Player responder) const {
    const double delta = responder == Player::Alice ? delta_a_ : delta_b_;
    double next_share = 0.0;
    if (use_horizon_ && obs.horizon_rounds) {
      const int rounds = *obs.horizon_rounds;
      if (obs.round >= rounds) return 0;
      next_share = backward_induction_shares(delta_a_, delta_b_, rounds)[static_cast<std::size_t>(obs.round)];
    } else {
      next_share = stationary_share(responder);
    }
    const auto units = std::llround(delta * next_share * static_cast<double>(obs.money));
    return std::clamp<std::int64_t>(units, 0, obs.money);
  }

  // Equilibrium share `proposer` claims when proposing in the infinite game.
  double stationary_share(Player proposer) const {
    if (delta_a_ * delta_b_ >= 1.0) return 0.5;
    return proposer == Player::Alice ? rubinstein_share(delta_a_, delta_b_)
                                     : rubinstein_share(delta_b_, delta_a_);
  }

  bool use_horizon_;
  double delta_a_ = 0.0;
  double delta_b_ = 0.0;
};

class FixedPriceAgent final : public Agent {
 public:
  explicit FixedPriceAgent(double price) : price_(static_cast<std::int64_t>(std::llround(price))) {}

  Action act(const Observation& obs) override {
    if (obs.shape->kind == ActionKind::ProposePrice) return ProposePrice{price_, std::nullopt};
    const auto offered = std::get<ProposePrice>(*obs.pending).price;
    return Respond{obs.role == Player::Alice ? offered >= price_ : offered <= price_};
  }

 private:
  std::int64_t price_;
};

// Heuristic concession: open at 1.5x (seller) or 0.5x (buyer) of the own
// valuation, then move to the midpoint of the two latest offers without
// crossing the own valuation. Accepts individually rational offers within 2%
// of M of the next own offer, or any rational offer in the last known round.
class MidpointAgent final : public Agent {
 public:
  Action act(const Observation& obs) override {
    const bool seller = obs.role == Player::Alice;
    const auto reservation = own_value_units(obs, seller);
    const auto next = next_offer(obs, seller, reservation);
    if (obs.shape->kind == ActionKind::ProposePrice) return ProposePrice{next, std::nullopt};

    const auto offered = std::get<ProposePrice>(*obs.pending).price;
    const bool rational = seller ? offered >= reservation : offered <= reservation;
    if (!rational) return Respond{false};
    if (obs.horizon_rounds && obs.round >= *obs.horizon_rounds) return Respond{true};
    const auto tolerance = static_cast<std::int64_t>(0.02 * static_cast<double>(obs.money));
    return Respond{seller ? offered + tolerance >= next : offered - tolerance <= next};
  }

 private:
  static std::int64_t next_offer(const Observation& obs, bool seller, std::int64_t reservation) {
    std::optional<std::int64_t> own_last;
    std::optional<std::int64_t> opp_last;
    for (const auto& e : obs.history) {
      if (const auto* p = std::get_if<ProposePrice>(&e.action)) {
        (e.actor == obs.role ? own_last : opp_last) = p->price;
      }
    }
    if (obs.pending) {
      if (const auto* p = std::get_if<ProposePrice>(&*obs.pending)) opp_last = p->price;
    }
    const double own_value = *obs.own_value;
    std::int64_t offer = 0;
    if (!own_last) {
      offer = static_cast<std::int64_t>(std::llround(own_value * (seller ? 1.5 : 0.5)));
    } else if (opp_last) {
      offer = (*own_last + *opp_last) / 2;
    } else {
      offer = *own_last;
    }
    return seller ? std::max(offer, reservation) : std::max<std::int64_t>(0, std::min(offer, reservation));
  }
};

// Commits to recommending high quality always and low quality w.p. q.
class CommitmentSellerAgent final : public Agent {
 public:
  CommitmentSellerAgent(std::optional<double> assumed_v, std::uint64_t seed)
      : assumed_v_(assumed_v.value_or(1.25)), rng_(seed) {}

  Action act(const Observation& obs) override {
    const double v = obs.value_v.value_or(assumed_v_);
    const double q = commitment_signal_prob(*obs.prior_p, v);
    const bool recommend = *obs.current_quality || bernoulli(rng_, q);
    return make_signal(obs, recommend);
  }

 private:
  double assumed_v_;
  Rng rng_;
};

// Bayesian buyer who believes the seller follows the commitment policy.
class BayesianBuyerAgent final : public Agent {
 public:
  explicit BayesianBuyerAgent(TieBreak tie_break) : tie_break_(tie_break) {}

  Action act(const Observation& obs) override {
    const double p = *obs.prior_p;
    const double v = *obs.value_v;
    const double posterior =
        signal_recommends(*obs.pending) ? posterior_on_recommend(p, commitment_signal_prob(p, v)) : 0.0;
    return BuyDecision{bayesian_buyer_decide(posterior, v, tie_break_)};
  }

 private:
  TieBreak tie_break_;
};

}  // namespace

std::unique_ptr<Agent> make_scripted_agent(const AgentSpec& spec, GameFamily family, Player role,
                                           std::uint64_t seed) {
  check_compatible(spec, family, role);
  const auto mixed = spec.seed ? combine_seeds({seed, *spec.seed}) : seed;
  switch (spec.kind) {
    case AgentKind::Random: return std::make_unique<RandomAgent>(mixed);
    case AgentKind::AlwaysAccept: return std::make_unique<AlwaysAcceptAgent>();
    case AgentKind::FixedSplit: return std::make_unique<FixedSplitAgent>(*spec.value);
    case AgentKind::FixedPrice: return std::make_unique<FixedPriceAgent>(*spec.value);
    case AgentKind::RubinsteinSpe: return std::make_unique<BargainingEquilibriumAgent>(false);
    case AgentKind::BackwardInduction: return std::make_unique<BargainingEquilibriumAgent>(true);
    case AgentKind::CommitmentSeller: return std::make_unique<CommitmentSellerAgent>(spec.value, mixed);
    case AgentKind::BayesianBuyer: return std::make_unique<BayesianBuyerAgent>(spec.tie_break);
    case AgentKind::Midpoint: return std::make_unique<MidpointAgent>();
    case AgentKind::Llm:
    case AgentKind::Human:
      break;
  }
  throw InvalidAgentSpec(fmt::format("'{}' is not a scripted agent", spec.to_string()));
}

Action act(const AgentSpec& spec, const Observation& obs) {
  if (!obs.shape) throw IllegalAction(fmt::format("it is not {}'s turn", to_string(obs.role)));
  return make_scripted_agent(spec, obs.family, obs.role, 0)->act(obs);
}

Action safe_default_action(const Observation& obs) {
  if (!obs.shape) throw IllegalAction(fmt::format("it is not {}'s turn", to_string(obs.role)));
  switch (obs.shape->kind) {
    case ActionKind::ProposeSplit:
      return split_giving_self(obs, obs.money / 2);
    case ActionKind::ProposePrice:
      return ProposePrice{own_value_units(obs, obs.role == Player::Alice), std::nullopt};
    case ActionKind::Respond:
      return Respond{false};
    case ActionKind::SellerSignal:
      return make_signal(obs, false);
    case ActionKind::BuyDecision:
      return BuyDecision{false};
  }
  throw IllegalAction("unreachable");
}

AgentFactory scripted_agent_factory() {
  return [](const AgentSpec& spec, const GameConfig& config, Player role, std::uint64_t seed,
            const std::string&) { return make_scripted_agent(spec, config.family(), role, seed); };
}

}  // namespace arena
