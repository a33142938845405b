#pragma once

#include <json.hpp>

#include "arena/core/observation.hpp"

// JSON encodings shared by transcripts, the session API and prompt tooling.
// Field names here are part of the persisted format; changing them breaks replay.
namespace arena {

using json = nlohmann::json;

json to_json(const Horizon& horizon);
Horizon horizon_from_json(const json& j);

json to_json(const GameConfig& config);
GameConfig config_from_json(const json& j);

// `with_message` = false drops the free text (transcripts store it separately).
json to_json(const Action& action, bool with_message = true);
Action action_from_json(const json& j);

json to_json(const Outcome& outcome);
Outcome outcome_from_json(GameFamily family, const json& j);

json to_json(const MetricSet& metrics);
MetricSet metrics_from_json(const json& j);

json to_json(const ActionShape& shape);
json to_json(const Observation& obs);

}  // namespace arena
