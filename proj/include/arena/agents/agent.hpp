#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "arena/agents/equilibrium.hpp"
#include "arena/core/observation.hpp"

namespace arena {

enum class AgentKind {
  Random,
  AlwaysAccept,
  FixedSplit,
  FixedPrice,
  RubinsteinSpe,
  BackwardInduction,
  CommitmentSeller,
  BayesianBuyer,
  Midpoint,
  Llm,
  Human,
};

// String-addressable agent description, e.g. "spe", "fixed_split:0.5",
// "bayes_buyer:reject", "llm:gpt-4o". The role comes from the seat it fills.
struct AgentSpec {
  AgentKind kind = AgentKind::AlwaysAccept;
  std::optional<double> value;        // fixed_split share, fixed_price amount, commitment assumed v
  std::optional<std::uint64_t> seed;  // random
  TieBreak tie_break = TieBreak::Buy; // bayes_buyer
  std::string ref;                    // llm provider alias / human session

  static AgentSpec parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

// "alice:bob" pair syntax. Tokens are grouped greedily by kind name, so
// "fixed_split:0.5:spe" is (fixed_split:0.5, spe); "," is also accepted as
// the pair separator.
std::pair<AgentSpec, AgentSpec> parse_agent_pair(std::string_view text);

// Comma-separated list of specs.
std::vector<AgentSpec> parse_agent_list(std::string_view text);

// Throws UnsupportedFamily when `spec` cannot play `role` in `family`.
void check_compatible(const AgentSpec& spec, GameFamily family, Player role);

class Agent {
 public:
  virtual ~Agent() = default;
  virtual Action act(const Observation& obs) = 0;
  // True once the agent had to fall back to a default action.
  virtual bool degraded() const { return false; }
};

// Builds one of the scripted / equilibrium agents. The seed drives any
// randomness; an explicit spec seed is mixed in. Throws UnsupportedFamily for
// incompatible specs and InvalidAgentSpec for llm / human kinds.
std::unique_ptr<Agent> make_scripted_agent(const AgentSpec& spec, GameFamily family, Player role,
                                           std::uint64_t seed);

// One-shot convenience: deterministic for every non-random kind.
Action act(const AgentSpec& spec, const Observation& obs);

// Family-safe forfeit move used when an agent cannot produce a valid action:
// responders reject, bargaining proposers offer 50/50, negotiation proposers
// ask their own valuation, sellers withhold the recommendation, buyers pass.
Action safe_default_action(const Observation& obs);

// Canonical free-text recommendations used by scripted sellers.
inline constexpr std::string_view kRecommendText = "I recommend buying this product.";
inline constexpr std::string_view kNoRecommendText = "I do not recommend buying this product.";

// Creates the agent that fills one seat of one game.
using AgentFactory = std::function<std::unique_ptr<Agent>(
    const AgentSpec& spec, const GameConfig& config, Player role, std::uint64_t seed,
    const std::string& game_id)>;

AgentFactory scripted_agent_factory();

}  // namespace arena
