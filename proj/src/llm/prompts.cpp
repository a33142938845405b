#include "arena/llm/prompts.hpp"

#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "arena/errors.hpp"
#include "arena/util/text.hpp"

namespace arena {

namespace {

struct Names {
  std::string self;
  std::string opp;
  std::string self_key;  // "alice" / "bob": JSON keys never change
  std::string opp_key;
};

Names names_for(const Observation& obs, std::string_view self_name) {
  Names n;
  n.self = self_name.empty() ? std::string(display_name(obs.role)) : std::string(self_name);
  n.opp = std::string(display_name(opponent_of(obs.role)));
  n.self_key = std::string(to_string(obs.role));
  n.opp_key = std::string(to_string(opponent_of(obs.role)));
  return n;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += '\n';
    out += lines[i];
  }
  return out;
}

std::string money_prefix(double amount) { return "$" + format_amount(amount); }
std::string money_suffix(double amount) { return format_amount(amount) + "$"; }

// ---- system prompts ---------------------------------------------------------

std::string alternating_rules(const Names& n, bool messages) {
  std::string text =
      "In each round of the game, one of the players will make a proposal for division";
  if (messages) text += " and can describe their proposal in a few words";
  text +=
      ". The other player will decide whether to accept the offer and finish the game, or to "
      "proceed to the next round, in which they will be the one making the proposal.";
  if (messages) text += fmt::format("\nWe will relay messages between you and {}.", n.opp);
  return text;
}

std::string bargaining_system(const Observation& obs, const Names& n) {
  std::vector<std::string> lines{"Let's play a game."};
  lines.push_back(fmt::format(
      "In this game, there are two players. You are playing as {}. You and {} need to divide {} "
      "between you.",
      n.self, n.opp, money_suffix(static_cast<double>(obs.money))));
  lines.push_back(alternating_rules(n, obs.messages_allowed));
  std::string inflation = fmt::format(
      "Beware of inflation! With each passing round, the money is worth {}% less for you.",
      format_percent(1.0 - obs.own_discount.value_or(1.0)));
  if (obs.opponent_discount) {
    inflation += fmt::format(" For {}, the money is worth {}% less.", n.opp,
                             format_percent(1.0 - *obs.opponent_discount));
  }
  if (obs.horizon_rounds) {
    inflation += fmt::format(
        " You have {} rounds to divide the money, or both of you will get nothing!",
        *obs.horizon_rounds);
  } else {
    inflation +=
        " There is no fixed number of rounds, but if you never agree on a division, both of you "
        "will get nothing!";
  }
  lines.push_back(std::move(inflation));
  return join_lines(lines);
}

std::string negotiation_system(const Observation& obs, const Names& n) {
  std::vector<std::string> lines{"Let's play a game."};
  std::string intro = fmt::format("In this game, there are two players. You are playing as {}. ", n.self);
  if (obs.role == Player::Alice) {
    intro += fmt::format("You are selling a product to {}.", n.opp);
  } else {
    intro += fmt::format("{} is selling a product that you may buy.", n.opp);
  }
  intro += fmt::format(" The product is worth {} to you.", money_suffix(obs.own_value.value_or(0.0)));
  if (obs.opponent_value) {
    intro += fmt::format(" For {}, the product is worth {}.", n.opp, money_suffix(*obs.opponent_value));
  }
  lines.push_back(std::move(intro));
  std::string rules = "In each round of the game, one of the players will propose a price for the product";
  if (obs.messages_allowed) rules += " and can describe their proposal in a few words";
  rules +=
      ". The other player will decide whether to accept the offer and finish the game, or to "
      "proceed to the next round, in which they will be the one making the proposal.";
  lines.push_back(std::move(rules));
  if (obs.messages_allowed) lines.push_back(fmt::format("We will relay messages between you and {}.", n.opp));
  if (obs.horizon_rounds) {
    lines.push_back(fmt::format(
        "You have {} {} to agree on a price, or the product will not be sold!", *obs.horizon_rounds,
        *obs.horizon_rounds == 1 ? "round" : "rounds"));
  } else {
    lines.push_back(
        "There is no fixed number of rounds, but if you never agree on a price, the product will "
        "not be sold!");
  }
  return join_lines(lines);
}

std::string rounds_sentence(const Observation& obs) {
  if (obs.horizon_rounds) return fmt::format("The game has {} rounds.", *obs.horizon_rounds);
  return "The number of rounds is not known in advance.";
}

std::string persuasion_system(const Observation& obs, const Names& n) {
  const double price = static_cast<double>(obs.money);
  const bool binary = obs.message_mode.value_or(MessageMode::Binary) == MessageMode::Binary;
  const bool myopic = obs.buyer_mode.value_or(BuyerMode::LongLiving) == BuyerMode::Myopic;
  const auto prior = format_percent(obs.prior_p.value_or(0.0));
  std::vector<std::string> lines{"Let's play a game."};
  if (obs.role == Player::Alice) {
    lines.push_back(fmt::format(
        "In this game, there are two players. You are playing as {}, a seller, and {} is a "
        "potential buyer.",
        n.self, n.opp));
    lines.push_back(rounds_sentence(obs));
    lines.push_back(fmt::format(
        "In each round, a new product is offered to {} at a price of {}. The product is of high "
        "quality with probability {}% and of low quality otherwise. You will learn the quality of "
        "each product before {} decides whether to buy it, but {} will not.",
        n.opp, money_suffix(price), prior, n.opp, n.opp));
    if (obs.value_v) {
      lines.push_back(fmt::format(
          "A high-quality product is worth {} to {}, and a low-quality product is worth 0$ to {}.",
          money_suffix(*obs.value_v * price), n.opp, n.opp));
    } else {
      lines.push_back(fmt::format(
          "You do not know how much a high-quality product is worth to {}. A low-quality product "
          "is worth 0$ to {}.",
          n.opp, n.opp));
    }
    lines.push_back(fmt::format("You gain 1 point for every product {} buys, regardless of its quality.", n.opp));
    lines.push_back(binary ? fmt::format("In each round, you can either recommend the product to {} or not.", n.opp)
                           : fmt::format("In each round, you can send {} a message about the product.", n.opp));
    lines.push_back(myopic
                        ? fmt::format("In each round a different buyer plays as {}. Each buyer only cares "
                                      "about the current round and sees only statistics of the previous rounds.",
                                      n.opp)
                        : fmt::format("{} plays all rounds and sees the full history of the game.", n.opp));
  } else {
    lines.push_back(fmt::format(
        "In this game, there are two players. You are playing as {}, a buyer, and {} is a seller.",
        n.self, n.opp));
    lines.push_back(rounds_sentence(obs));
    lines.push_back(fmt::format(
        "In each round, {} offers you a product at a price of {}. The product is of high quality "
        "with probability {}% and of low quality otherwise. {} knows the quality of each product, "
        "but you do not.",
        n.opp, money_suffix(price), prior, n.opp));
    lines.push_back(fmt::format(
        "A high-quality product is worth {} to you, and a low-quality product is worth 0$ to you. "
        "If you buy, you pay the price. If you do not buy, you gain nothing and lose nothing.",
        money_suffix(obs.value_v.value_or(0.0) * price)));
    lines.push_back(binary ? fmt::format("In each round, {} can either recommend the product or not.", n.opp)
                           : fmt::format("In each round, {} can send you a message about the product.", n.opp));
    lines.push_back(myopic ? "You only care about the current round. You will see statistics of the previous rounds."
                           : "You play all rounds and aim to maximize your total gain.");
  }
  return join_lines(lines);
}

// ---- guidelines ---------------------------------------------------------------

std::string split_guideline(const Observation& obs, const Names& n) {
  const auto total = money_suffix(static_cast<double>(obs.money));
  std::string text = obs.messages_allowed
                         ? fmt::format("Send your offer to divide {} and the message you attached in the JSON format:\n", total)
                         : fmt::format("Send your offer to divide {} in the JSON format:\n", total);
  text += fmt::format("{{\"{}_gain\": The part that you will receive in your offer,\n", n.self_key);
  text += fmt::format("\"{}_gain\": The part that {} will receive in your offer", n.opp_key, n.opp);
  if (obs.messages_allowed) text += fmt::format(",\n\"message\": The message you pass to {}", n.opp);
  return text + "}";
}

std::string price_guideline(const Observation& obs, const Names& n) {
  std::string text = obs.messages_allowed
                         ? "Send your price offer and the message you attached in the JSON format:\n"
                         : "Send your price offer in the JSON format:\n";
  text += "{\"product_price\": The price you offer for the product";
  if (obs.messages_allowed) text += fmt::format(",\n\"message\": The message you pass to {}", n.opp);
  return text + "}";
}

std::string guideline_for(const Observation& obs, const Names& n) {
  if (!obs.shape) return {};
  switch (obs.shape->kind) {
    case ActionKind::ProposeSplit: return split_guideline(obs, n);
    case ActionKind::ProposePrice: return price_guideline(obs, n);
    case ActionKind::Respond: return R"(Answer with {"decision": "accept"} or {"decision": "reject"})";
    case ActionKind::SellerSignal:
      if (obs.shape->signal_mode == MessageMode::Binary) {
        return R"(Answer with {"recommend": true} or {"recommend": false})";
      }
      return fmt::format("Send your message in the JSON format:\n{{\"message\": The message you pass to {}}}", n.opp);
    case ActionKind::BuyDecision: return R"(Answer with {"decision": "yes"} or {"decision": "no"})";
  }
  return {};
}

std::string format_section(const Observation& obs, const Names& n) {
  std::vector<std::string> lines{"", "Response format:"};
  const auto total = money_suffix(static_cast<double>(obs.money));
  switch (obs.family) {
    case GameFamily::Bargaining: {
      lines.push_back("When it is your turn to make an offer, reply in the JSON format:");
      std::string body = fmt::format("{{\"{}_gain\": The part that you will receive in your offer,\n", n.self_key);
      body += fmt::format("\"{}_gain\": The part that {} will receive in your offer", n.opp_key, n.opp);
      if (obs.messages_allowed) body += fmt::format(",\n\"message\": The message you pass to {}", n.opp);
      lines.push_back(body + "}");
      lines.push_back(fmt::format("The two parts must add up to {}.", total));
      lines.push_back(R"(When you receive an offer, answer with {"decision": "accept"} or {"decision": "reject"})");
      break;
    }
    case GameFamily::Negotiation: {
      lines.push_back("When it is your turn to make an offer, reply in the JSON format:");
      std::string body = "{\"product_price\": The price you offer for the product";
      if (obs.messages_allowed) body += fmt::format(",\n\"message\": The message you pass to {}", n.opp);
      lines.push_back(body + "}");
      lines.push_back(R"(When you receive an offer, answer with {"decision": "accept"} or {"decision": "reject"})");
      break;
    }
    case GameFamily::Persuasion: {
      const bool binary = obs.message_mode.value_or(MessageMode::Binary) == MessageMode::Binary;
      if (obs.role == Player::Alice) {
        lines.push_back(binary ? R"(In each round, answer with {"recommend": true} or {"recommend": false})"
                               : fmt::format("In each round, reply in the JSON format:\n{{\"message\": The message you pass to {}}}", n.opp));
      } else {
        lines.push_back(R"(In each round, answer with {"decision": "yes"} or {"decision": "no"})");
      }
      break;
    }
  }
  return join_lines(lines);
}

// ---- turn prompts ---------------------------------------------------------------

std::string inflation_line(const Observation& obs, const Names& n) {
  auto worth = [&](std::optional<double> delta) {
    const double loss = 1.0 - std::pow(delta.value_or(1.0), obs.round - 1);
    if (format_percent(loss) == "0") return std::string("worth the same as in the first round.");
    return fmt::format("worth {}% less than in the first round.", format_percent(loss));
  };
  if (obs.opponent_discount) {
    return fmt::format("Due to inflation, the money {} gains is {} The money you gain is {}", n.opp,
                       worth(obs.opponent_discount), worth(obs.own_discount));
  }
  return fmt::format("Due to inflation, the money you gain is {}", worth(obs.own_discount));
}

std::vector<std::string> offer_block(const Observation& obs, const Names& n) {
  std::vector<std::string> lines{fmt::format("{}'s offer:", n.opp)};
  if (!obs.pending) return lines;
  if (const auto& msg = message_of(*obs.pending)) lines.push_back(fmt::format("# {}'s message: {}", n.opp, *msg));
  if (const auto* split = std::get_if<ProposeSplit>(&*obs.pending)) {
    const auto alice = split->alice_amount;
    const auto bob = obs.money - alice;
    const auto self_amount = obs.role == Player::Alice ? alice : bob;
    lines.push_back(fmt::format("# {} gain: {}", n.self, group_thousands(self_amount)));
    lines.push_back(fmt::format("# {} gain: {}", n.opp, group_thousands(obs.money - self_amount)));
  } else if (const auto* price = std::get_if<ProposePrice>(&*obs.pending)) {
    lines.push_back(fmt::format("# Product price: {}", money_suffix(static_cast<double>(price->price))));
  }
  lines.push_back("Do you accept this offer?");
  return lines;
}

std::string alternating_turn(const Observation& obs, const Names& n) {
  std::vector<std::string> lines;
  const auto& h = obs.history;
  std::ptrdiff_t last_own = -1;
  for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(h.size()) - 1; i >= 0; --i) {
    if (h[static_cast<std::size_t>(i)].actor == obs.role) {
      last_own = i;
      break;
    }
  }
  if (last_own >= 0) {
    const auto& own = h[static_cast<std::size_t>(last_own)];
    if (const auto* r = std::get_if<Respond>(&own.action); r && !r->accept) {
      lines.push_back(fmt::format("You have chosen to reject {}'s offer from round {}.", n.opp, own.round));
    }
  }
  for (auto i = static_cast<std::size_t>(last_own + 1); i < h.size(); ++i) {
    if (const auto* r = std::get_if<Respond>(&h[i].action); r && !r->accept) {
      lines.push_back(fmt::format("{} rejected your offer from round {}.", n.opp, h[i].round));
      lines.push_back("");
    }
  }
  lines.push_back(fmt::format("Round {}", obs.round));
  if (obs.phase == Phase::AwaitResponse) {
    if (obs.family == GameFamily::Bargaining && obs.round > 1) lines.push_back(inflation_line(obs, n));
    for (auto& l : offer_block(obs, n)) lines.push_back(std::move(l));
  } else if (obs.family == GameFamily::Bargaining) {
    const auto total = money_prefix(static_cast<double>(obs.money));
    lines.push_back(obs.messages_allowed
                        ? fmt::format("Send your offer to divide {} and a message to {}.", total, n.opp)
                        : fmt::format("Send your offer to divide {}.", total));
  } else {
    lines.push_back(obs.messages_allowed
                        ? fmt::format("Send your price offer for the product and a message to {}.", n.opp)
                        : std::string("Send your price offer for the product."));
  }
  return join_lines(lines);
}

std::string quality_word(bool high) { return high ? "high" : "low"; }

std::string signal_line(const Observation& obs, const Names& n) {
  if (!obs.pending) return {};
  const auto* s = std::get_if<SellerSignal>(&*obs.pending);
  if (!s) return {};
  if (s->recommend) {
    return *s->recommend ? fmt::format("{} recommends buying the product.", n.opp)
                         : fmt::format("{} does not recommend buying the product.", n.opp);
  }
  return fmt::format("{}'s message: {}", n.opp, s->text.value_or(""));
}

std::string persuasion_turn(const Observation& obs, const Names& n) {
  std::vector<std::string> lines;
  // Last round's purchase, if any, from the player's own history.
  const VisibleEvent* last_buy = nullptr;
  for (auto it = obs.history.rbegin(); it != obs.history.rend(); ++it) {
    if (std::holds_alternative<BuyDecision>(it->action) && it->round == obs.round - 1) {
      last_buy = &*it;
      break;
    }
  }
  if (obs.role == Player::Alice) {
    if (last_buy) {
      const bool bought = std::get<BuyDecision>(last_buy->action).buy;
      lines.push_back(bought ? fmt::format("In round {}, {} bought the product.", last_buy->round, n.opp)
                             : fmt::format("In round {}, {} did not buy the product.", last_buy->round, n.opp));
    }
    lines.push_back(fmt::format("Round {}", obs.round));
    if (obs.current_quality) {
      lines.push_back(fmt::format("The product in this round is of {} quality.", quality_word(*obs.current_quality)));
    }
    const bool binary = obs.message_mode.value_or(MessageMode::Binary) == MessageMode::Binary;
    lines.push_back(binary ? fmt::format("Do you recommend the product to {}?", n.opp)
                           : fmt::format("Send your message to {}.", n.opp));
    return join_lines(lines);
  }
  if (last_buy) {
    const bool bought = std::get<BuyDecision>(last_buy->action).buy;
    if (bought && last_buy->quality) {
      lines.push_back(fmt::format("In round {}, you bought the product and it was of {} quality.", last_buy->round,
                                  quality_word(*last_buy->quality)));
    } else if (bought) {
      lines.push_back(fmt::format("In round {}, you bought the product.", last_buy->round));
    } else {
      lines.push_back(fmt::format("In round {}, you did not buy the product.", last_buy->round));
    }
  }
  lines.push_back(fmt::format("Round {}", obs.round));
  if (obs.stats) {
    if (obs.stats->prior_rounds == 0) {
      lines.push_back("This is the first round, so there are no statistics from previous rounds yet.");
    } else {
      lines.push_back(fmt::format(
          "In the previous {} rounds, the product was bought in {}% of the rounds, and a low-quality "
          "product was bought in {}% of the rounds.",
          obs.stats->prior_rounds, format_percent(obs.stats->bought_fraction),
          format_percent(obs.stats->low_bought_fraction)));
    }
  }
  lines.push_back(signal_line(obs, n));
  lines.push_back("Do you want to buy the product?");
  return join_lines(lines);
}

}  // namespace

std::string build_system_prompt(const Observation& obs, std::string_view self_name, bool include_format) {
  const auto n = names_for(obs, self_name);
  std::string text;
  switch (obs.family) {
    case GameFamily::Bargaining: text = bargaining_system(obs, n); break;
    case GameFamily::Negotiation: text = negotiation_system(obs, n); break;
    case GameFamily::Persuasion: text = persuasion_system(obs, n); break;
  }
  if (include_format) text += "\n" + format_section(obs, n);
  return text;
}

std::string build_turn_prompt(const Observation& obs, std::string_view self_name, bool include_format) {
  if (!obs.my_turn()) throw IllegalAction(fmt::format("it is not {}'s turn", to_string(obs.role)));
  const auto n = names_for(obs, self_name);
  std::string text =
      obs.family == GameFamily::Persuasion ? persuasion_turn(obs, n) : alternating_turn(obs, n);
  if (include_format) text += "\n\n" + guideline_for(obs, n);
  return text;
}

std::string reply_guideline(const Observation& obs) { return guideline_for(obs, names_for(obs, {})); }

}  // namespace arena
