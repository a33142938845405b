#include "arena/llm/reply_parser.hpp"

#include <cmath>
#include <type_traits>

#include <fmt/format.h>

#include "arena/core/json.hpp"
#include "arena/errors.hpp"
#include "arena/util/text.hpp"

namespace arena {

std::optional<std::string> extract_json_object(std::string_view text) {
  for (std::size_t start = text.find('{'); start != std::string_view::npos;
       start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) {
        auto candidate = std::string(text.substr(start, i - start + 1));
        if (json::accept(candidate)) return candidate;
        break;
      }
    }
  }
  return std::nullopt;
}

namespace {

const json& require(const json& obj, const char* key) {
  if (!obj.contains(key)) throw ParseFailure(fmt::format("reply is missing \"{}\"", key));
  return obj.at(key);
}

// Accepts 900, 900.0, "900", "$1,000", "1,000$".
double number_of(const json& value, const char* key) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    std::string digits;
    for (char c : value.get<std::string>()) {
      if (c == ',' || c == '$' || c == ' ') continue;
      digits += c;
    }
    try {
      std::size_t used = 0;
      const double v = std::stod(digits, &used);
      if (used == digits.size()) return v;
    } catch (const std::exception&) {
    }
  }
  throw ParseFailure(fmt::format("\"{}\" is not a number", key));
}

std::int64_t amount_of(const json& value, const char* key) {
  const double v = number_of(value, key);
  if (!std::isfinite(v)) throw RangeViolation(fmt::format("\"{}\" is not finite", key));
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-9 * std::max(1.0, std::abs(v))) {
    throw RangeViolation(fmt::format("\"{}\" must be a whole amount, got {}", key, v));
  }
  return static_cast<std::int64_t>(r);
}

std::optional<std::string> optional_message(const json& obj, bool allowed) {
  if (!allowed || !obj.contains("message")) return std::nullopt;
  const auto& m = obj.at("message");
  if (!m.is_string()) return std::nullopt;
  return m.get<std::string>();
}

bool choice_of(const json& value, const char* key, std::string_view yes, std::string_view no) {
  if (value.is_boolean()) return value.get<bool>();
  if (value.is_string()) {
    const auto text = to_lower(trim(value.get<std::string>()));
    if (text == yes || text == "true") return true;
    if (text == no || text == "false") return false;
  }
  throw ParseFailure(fmt::format("\"{}\" must be \"{}\" or \"{}\"", key, yes, no));
}

}  // namespace

Action parse_reply(std::string_view raw, const Observation& obs) {
  if (!obs.shape) throw IllegalAction("no move is expected from this player");
  const auto text = extract_json_object(raw);
  if (!text) throw ParseFailure("no JSON object found in reply");
  const auto obj = json::parse(*text);
  const auto& shape = *obs.shape;

  switch (shape.kind) {
    case ActionKind::ProposeSplit: {
      const auto alice = amount_of(require(obj, "alice_gain"), "alice_gain");
      const auto bob = amount_of(require(obj, "bob_gain"), "bob_gain");
      if (alice < 0 || bob < 0) throw RangeViolation("gains must be non-negative");
      if (alice + bob != obs.money) {
        throw RangeViolation(fmt::format("gains must add up to {}, got {} + {}", obs.money, alice, bob));
      }
      return ProposeSplit{alice, optional_message(obj, shape.message_allowed)};
    }
    case ActionKind::ProposePrice: {
      const auto price = amount_of(require(obj, "product_price"), "product_price");
      if (price < shape.min_amount || (shape.max_amount && price > *shape.max_amount)) {
        throw RangeViolation(fmt::format("price {} is out of range", price));
      }
      return ProposePrice{price, optional_message(obj, shape.message_allowed)};
    }
    case ActionKind::Respond:
      return Respond{choice_of(require(obj, "decision"), "decision", "accept", "reject")};
    case ActionKind::SellerSignal:
      if (shape.signal_mode == MessageMode::Binary) {
        return SellerSignal{choice_of(require(obj, "recommend"), "recommend", "yes", "no"), std::nullopt};
      } else {
        const auto& m = require(obj, "message");
        if (!m.is_string() || trim(m.get<std::string>()).empty()) {
          throw ParseFailure("\"message\" must be a non-empty string");
        }
        return SellerSignal{std::nullopt, m.get<std::string>()};
      }
    case ActionKind::BuyDecision:
      return BuyDecision{choice_of(require(obj, "decision"), "decision", "yes", "no")};
  }
  throw ParseFailure("unsupported move");
}

std::string render_reply(const Action& action, const Observation& obs) {
  json j = json::object();
  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, ProposeSplit>) {
          j["alice_gain"] = a.alice_amount;
          j["bob_gain"] = obs.money - a.alice_amount;
          if (a.message) j["message"] = *a.message;
        } else if constexpr (std::is_same_v<T, ProposePrice>) {
          j["product_price"] = a.price;
          if (a.message) j["message"] = *a.message;
        } else if constexpr (std::is_same_v<T, Respond>) {
          j["decision"] = a.accept ? "accept" : "reject";
        } else if constexpr (std::is_same_v<T, SellerSignal>) {
          if (a.recommend) j["recommend"] = *a.recommend;
          if (a.text) j["message"] = *a.text;
        } else {
          j["decision"] = a.buy ? "yes" : "no";
        }
      },
      action);
  return j.dump();
}

}  // namespace arena
