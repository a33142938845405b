#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "arena/agents/agent.hpp"
#include "arena/core/transcript.hpp"
#include "arena/orchestrator/grid.hpp"

namespace arena {

// One (config, pair, repetition) cell of a run.
struct GameTask {
  GameConfig config;
  AgentPair pair;
  int rep = 0;
  std::string game_id;
  std::uint64_t seed = 0;
};

// Per-game seed from (run seed, config_id, pair, repetition).
std::uint64_t game_seed(std::uint64_t run_seed, const std::string& config_id, const AgentPair& pair, int rep);
std::string make_game_id(std::uint64_t run_seed, const std::string& config_id, const AgentPair& pair, int rep);

struct TaskPlan {
  std::vector<GameTask> tasks;
  // (config, pair) cells skipped because an agent cannot play that family/role.
  int incompatible_cells = 0;
};

// Tasks in deterministic order: config, then pair, then repetition.
TaskPlan plan_tasks(const std::vector<GameConfig>& grid, const std::vector<AgentPair>& roster, int repetitions,
                    std::uint64_t run_seed);

// Plays one game to completion and returns its transcript (not persisted).
// Transport failures yield status failed; agents that fell back to a default
// action (or whose action was illegal) yield status degraded. AuthError
// propagates.
Transcript play_game(const GameTask& task, const AgentFactory& factory);

struct LedgerEntry {
  std::string game_id;
  std::string config_id;
  std::string pair;
  int rep = 0;
  GameStatus status = GameStatus::Done;
};

// Append-only record of a run: a header line followed by one line per
// persisted game. Stored as JSON lines in <run_dir>/ledger.
struct RunLedger {
  std::string run_id;
  std::string grid_hash;
  std::uint64_t seed = 0;
  int repetitions = 1;
  std::vector<std::string> roster;
  std::vector<LedgerEntry> games;

  // Completed games per "config_id|pair" cell.
  std::map<std::string, int> cell_counts() const;
  std::map<GameStatus, int> status_counts() const;
};

RunLedger read_ledger(const std::filesystem::path& run_dir);

// Named points where a test hook may observe (or kill) the process:
// "before_write", "before_rename", "after_rename", "after_ledger".
using CrashHook = std::function<void(std::string_view point, const std::string& game_id)>;

struct RunOptions {
  std::filesystem::path run_dir;
  std::vector<AgentPair> roster;
  int repetitions = 1;
  int parallelism = 1;
  std::uint64_t seed = 0;
  AgentFactory factory = scripted_agent_factory();
  CrashHook crash_hook;
  std::function<void(const Transcript&)> on_game;
};

struct RunResult {
  RunLedger ledger;
  int planned = 0;
  int played = 0;        // games played by this invocation
  int resumed = 0;       // games already persisted before this invocation
  int incompatible_cells = 0;
};

// Plays every planned task not yet persisted under run_dir. Throws
// LedgerMismatch when run_dir holds a ledger for a different grid, roster,
// repetition count or seed.
RunResult run_batch(const std::vector<GameConfig>& grid, const RunOptions& options);

// Table-5 style counts per family.
struct FamilyStats {
  GameFamily family = GameFamily::Bargaining;
  int games = 0;
  int decisions = 0;  // every recorded action
  int messages = 0;   // actions carrying non-empty free text
  int words = 0;      // words across those messages
  int excluded = 0;   // games flagged failed/degraded/disqualified

  friend bool operator==(const FamilyStats&, const FamilyStats&) = default;
};

// One row per family in enum order, zero rows included.
std::vector<FamilyStats> summarize(const std::vector<Transcript>& transcripts);
std::vector<FamilyStats> summarize_run(const std::filesystem::path& run_dir);

std::vector<Transcript> load_run_transcripts(const std::filesystem::path& run_dir);

std::string format_summary(const std::vector<FamilyStats>& rows);

}  // namespace arena
