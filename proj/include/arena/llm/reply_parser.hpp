#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "arena/core/observation.hpp"

namespace arena {

// First balanced JSON object embedded in `text` (code fences and prose
// around it are ignored). Returns nullopt when none parses.
std::optional<std::string> extract_json_object(std::string_view text);

// Converts a model reply into the action `obs.shape` asks for.
// Throws ParseFailure when no usable JSON is found and RangeViolation when
// the values fall outside the legal bounds (e.g. a split not summing to M).
Action parse_reply(std::string_view raw, const Observation& obs);

// Canonical JSON reply for `action`, as a model following the guideline
// would write it. parse_reply(render_reply(a, obs), obs) == a.
std::string render_reply(const Action& action, const Observation& obs);

struct ParsedReply {
  Action action;
  std::string raw_text;
  int parse_attempts = 1;
};

}  // namespace arena
