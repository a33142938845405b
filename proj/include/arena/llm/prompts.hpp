#pragma once

#include <string>
#include <string_view>

#include "arena/core/observation.hpp"

namespace arena {

// Game rules as shown to `obs.role`. Parameters absent from the observation
// (incomplete information, hidden horizon) are never mentioned. When
// `include_format` is set the JSON reply conventions are appended.
// `self_name` replaces the role's display name in the text.
std::string build_system_prompt(const Observation& obs, std::string_view self_name = {},
                                bool include_format = true);

// Prompt for the current turn: what happened since the player last acted,
// the round header and the requested move, followed by the JSON guideline
// for that move when `include_format` is set.
std::string build_turn_prompt(const Observation& obs, std::string_view self_name = {},
                              bool include_format = true);

// JSON reply guideline for the move `obs.shape` asks for.
std::string reply_guideline(const Observation& obs);

}  // namespace arena
