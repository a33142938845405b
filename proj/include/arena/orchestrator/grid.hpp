#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "arena/agents/agent.hpp"
#include "arena/core/json.hpp"
#include "arena/core/types.hpp"

namespace arena {

struct BargainingAxes {
  std::vector<double> delta_a, delta_b;
  std::vector<std::int64_t> money;
  std::vector<Horizon> horizon;
  std::vector<bool> complete_info, messages_allowed;
};

struct NegotiationAxes {
  std::vector<double> f_a, f_b;
  std::vector<std::int64_t> money;
  std::vector<Horizon> horizon;
  std::vector<bool> complete_info, messages_allowed;
};

struct PersuasionAxes {
  std::vector<double> prior_p, value_v;
  std::vector<std::int64_t> money;
  std::vector<Horizon> horizon;
  std::vector<bool> complete_info;
  std::vector<MessageMode> message_mode;
  std::vector<BuyerMode> buyer_mode;
};

using AgentPair = std::pair<AgentSpec, AgentSpec>;

// Per-family parameter lists; a family that is absent contributes no cells.
// Roster and repetitions are optional defaults the CLI may override.
struct GridSpec {
  std::optional<BargainingAxes> bargaining;
  std::optional<NegotiationAxes> negotiation;
  std::optional<PersuasionAxes> persuasion;
  int infinite_cap = kDefaultInfiniteCap;
  std::vector<AgentPair> roster;
  int repetitions = 1;
};

// Grid file format (JSON):
//   {"infinite_cap": 50,
//    "bargaining":  {"delta_a": [...], "delta_b": [...], "money": [...],
//                    "horizon": [12, "inf"], "complete_info": [true, false],
//                    "messages_allowed": [true, false]},
//    "negotiation": {"f_a": [...], "f_b": [...], "money", "horizon",
//                    "complete_info", "messages_allowed"},
//    "persuasion":  {"prior_p": [0.5, "1/3"], "value_v": [...], "money",
//                    "horizon", "complete_info",
//                    "message_mode": ["binary", "text"],
//                    "buyer_mode": ["long_living", "myopic"]},
//    "roster": ["spe:spe"], "repetitions": 1}
// Numbers may be written as "a/b" fractions; horizons are round counts or "inf".
GridSpec grid_from_json(const json& j);
GridSpec load_grid(const std::filesystem::path& path);
json to_json(const GridSpec& spec);

// Cartesian product in deterministic order (families in enum order, axes in
// declaration order, last axis fastest). Every cell is validated.
// Throws EmptyGrid when no cell results and GridFormatError on invalid cells.
std::vector<GameConfig> expand_grid(const GridSpec& spec);

// Content hash of a config (config_id excluded): 16 hex digits.
std::string config_content_id(const GameConfig& config);

// Hash of the ordered config ids of an expanded grid.
std::string grid_hash(const std::vector<GameConfig>& configs);

std::string pair_to_string(const AgentPair& pair);

// Documentation printed by `arena run --help`.
std::string_view grid_format_help();

}  // namespace arena
