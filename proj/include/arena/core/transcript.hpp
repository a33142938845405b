#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arena/core/game.hpp"

namespace arena {

// Line-delimited transcript format. Every record is one JSON object on its
// own line and carries "type" and "game_id".
//
//   {"type":"game", "game_id", "config", "seed", "alice", "bob", "qualities"?, "source"}
//   {"type":"event", "game_id", "round", "actor", "action", "message"?, "timestamp"}
//   {"type":"outcome", "game_id", "status", "outcome"?, "metrics"?,
//    "excluded", "error"?}
//
// `action` never contains the free text; it is carried in `message` so the
// event record matches {game_id, round, actor, action, message?, timestamp}.
// Replaying the events from (config, seed) reproduces outcome and metrics.

enum class GameStatus { Done, Failed, Degraded };

std::string_view to_string(GameStatus status) noexcept;
GameStatus parse_status(std::string_view text);

struct TimedEvent {
  Event event;
  std::string timestamp;
};

struct Transcript {
  std::string game_id;
  GameConfig config;
  std::uint64_t seed = 0;
  std::string alice_agent;
  std::string bob_agent;
  std::string source = "batch";
  std::vector<bool> qualities;
  std::vector<TimedEvent> events;
  GameStatus status = GameStatus::Done;
  std::optional<Outcome> outcome;
  std::optional<MetricSet> metrics;
  bool excluded = false;
  std::string error;
};

// ISO-8601 UTC wall-clock time with millisecond resolution.
std::string utc_timestamp();

std::string to_jsonl(const Transcript& transcript);
Transcript parse_transcript(std::string_view text);
Transcript read_transcript(const std::filesystem::path& path);

struct ReplayResult {
  GameState state;
  std::optional<MetricSet> metrics;
  // True when the replayed outcome and metrics equal the stored ones exactly.
  bool matches = false;
};

ReplayResult verify_replay(const Transcript& transcript);

// Writes `content` to `path` via a temporary file, fsync and rename.
// `before_rename` runs after the temporary file is durable (crash tests).
void write_file_atomic(const std::filesystem::path& path, std::string_view content,
                       const std::function<void()>& before_rename = {});

}  // namespace arena
