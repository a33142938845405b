#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <fmt/format.h>
#include <unistd.h>

#include "arena/core/json.hpp"
#include "arena/errors.hpp"
#include "arena/orchestrator/grid.hpp"
#include "arena/orchestrator/run.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

namespace arena {
namespace {

namespace fs = std::filesystem;

const fs::path kDefaultGrid = fs::path(ARENA_SOURCE_DIR) / "grids" / "default.grid.json";

class ScratchDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           fmt::format("arena_orch_{}_{}", ::testing::UnitTest::GetInstance()->current_test_info()->name(),
                       ::getpid());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

GridSpec two_bargaining_cells() {
  return grid_from_json(json::parse(R"({
    "bargaining": {"delta_a": [0.9], "delta_b": [0.9, 0.8], "money": [10000], "horizon": ["inf"],
                   "complete_info": [true], "messages_allowed": [false]}})"));
}

std::vector<AgentPair> roster(const char* text) { return {parse_agent_pair(text)}; }

std::size_t count_files(const fs::path& dir, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ext ? 1 : 0;
  return n;
}

// Serialized transcript with wall-clock timestamps blanked.
std::string canonical(Transcript t) {
  for (auto& e : t.events) e.timestamp.clear();
  return to_jsonl(t);
}

struct Interrupt {};

TEST(Grid, DefaultGridHasPublishedCounts) {
  const auto configs = expand_grid(load_grid(kDefaultGrid));
  int counts[3] = {0, 0, 0};
  for (const auto& c : configs) ++counts[static_cast<int>(c.family())];
  EXPECT_EQ(counts[0], 384);
  EXPECT_EQ(counts[1], 576);
  EXPECT_EQ(counts[2], 360);
  EXPECT_EQ(configs.size(), 1320u);
}

TEST(Grid, ConfigIdsAreUniqueContentHashes) {
  const auto configs = expand_grid(load_grid(kDefaultGrid));
  std::set<std::string> ids;
  for (const auto& c : configs) {
    EXPECT_EQ(c.config_id.size(), 16u);
    EXPECT_EQ(c.config_id, config_content_id(c));
    ids.insert(c.config_id);
  }
  EXPECT_EQ(ids.size(), configs.size());
}

TEST(Grid, ExpansionIsDeterministic) {
  const auto spec = load_grid(kDefaultGrid);
  const auto a = expand_grid(spec);
  const auto b = expand_grid(grid_from_json(to_json(spec)));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  EXPECT_EQ(grid_hash(a), grid_hash(b));
}

TEST(Grid, TwoByTwoByTwoGivesEight) {
  const auto spec = grid_from_json(json::parse(R"({
    "negotiation": {"f_a": [0.8, 1.2], "f_b": [1.0], "money": [100, 10000], "horizon": [10],
                    "complete_info": [true, false], "messages_allowed": [false]}})"));
  EXPECT_EQ(expand_grid(spec).size(), 8u);
}

TEST(Grid, LastAxisVariesFastest) {
  const auto configs = expand_grid(two_bargaining_cells());
  ASSERT_EQ(configs.size(), 2u);
  EXPECT_EQ(std::get<BargainingConfig>(configs[0].params).delta_b, 0.9);
  EXPECT_EQ(std::get<BargainingConfig>(configs[1].params).delta_b, 0.8);
}

TEST(Grid, FractionStringsAndInfiniteHorizon) {
  const auto spec = grid_from_json(json::parse(R"({"infinite_cap": 7,
    "persuasion": {"prior_p": ["1/3"], "value_v": [2], "money": [100], "horizon": [20],
                   "complete_info": [true], "message_mode": ["text"], "buyer_mode": ["myopic"]},
    "bargaining": {"delta_a": [0.9], "delta_b": [0.9], "money": [100], "horizon": ["inf"],
                   "complete_info": [false], "messages_allowed": [true]}})"));
  const auto configs = expand_grid(spec);
  ASSERT_EQ(configs.size(), 2u);
  EXPECT_EQ(configs[0].family(), GameFamily::Bargaining);
  EXPECT_TRUE(configs[0].horizon().infinite);
  EXPECT_EQ(configs[0].horizon().rounds, 7);
  const auto& p = std::get<PersuasionConfig>(configs[1].params);
  EXPECT_DOUBLE_EQ(p.prior_p, 1.0 / 3.0);
  EXPECT_EQ(p.message_mode, MessageMode::FreeText);
  EXPECT_EQ(p.buyer_mode, BuyerMode::Myopic);
}

TEST(Grid, EmptyAxisIsEmptyGrid) {
  const auto spec = grid_from_json(json::parse(R"({
    "bargaining": {"delta_a": [], "delta_b": [0.9], "money": [100], "horizon": [3],
                   "complete_info": [true], "messages_allowed": [true]}})"));
  EXPECT_THROW(expand_grid(spec), EmptyGrid);
  EXPECT_THROW(expand_grid(GridSpec{}), EmptyGrid);
}

TEST(Grid, MalformedGridsAreRejected) {
  EXPECT_THROW(grid_from_json(json::parse(R"({"bargain": {}})")), GridFormatError);
  EXPECT_THROW(grid_from_json(json::parse(R"({"bargaining": {"delta_a": [0.9]}})")), GridFormatError);
  EXPECT_THROW(grid_from_json(json::parse(R"({"bargaining": {"delta_a": [0.9], "delta_b": [0.9],
    "money": [100], "horizon": [0], "complete_info": [true], "messages_allowed": [true]}})")),
               GridFormatError);
  EXPECT_THROW(grid_from_json(json::parse(R"({"bargaining": {"delta_a": ["x"], "delta_b": [0.9],
    "money": [100], "horizon": [2], "complete_info": [true], "messages_allowed": [true]}})")),
               GridFormatError);
  EXPECT_THROW(grid_from_json(json::parse(R"({"roster": ["nobody:spe"]})")), GridFormatError);
  EXPECT_THROW(grid_from_json(json::parse("[]")), GridFormatError);
  // A cell that fails config validation (discount above 1).
  const auto bad = grid_from_json(json::parse(R"({"bargaining": {"delta_a": [1.5], "delta_b": [0.9],
    "money": [100], "horizon": [2], "complete_info": [true], "messages_allowed": [true]}})"));
  EXPECT_THROW(expand_grid(bad), GridFormatError);
}

TEST(Plan, SeedsAndIdsDependOnEveryComponent) {
  const auto pair = parse_agent_pair("spe:spe");
  const auto other = parse_agent_pair("bi:bi");
  const auto base = game_seed(1, "c", pair, 0);
  EXPECT_EQ(base, game_seed(1, "c", pair, 0));
  EXPECT_NE(base, game_seed(2, "c", pair, 0));
  EXPECT_NE(base, game_seed(1, "d", pair, 0));
  EXPECT_NE(base, game_seed(1, "c", other, 0));
  EXPECT_NE(base, game_seed(1, "c", pair, 1));
  EXPECT_NE(make_game_id(1, "c", pair, 0), make_game_id(1, "c", pair, 1));
}

TEST(Plan, IncompatibleCellsAreSkipped) {
  const auto configs = expand_grid(load_grid(kDefaultGrid));
  const auto plan = plan_tasks(configs, roster("spe:spe"), 1, 0);
  EXPECT_EQ(plan.tasks.size(), 384u);
  EXPECT_EQ(plan.incompatible_cells, 576 + 360);
  for (const auto& t : plan.tasks) EXPECT_EQ(t.config.family(), GameFamily::Bargaining);
}

TEST_F(ScratchDir, TwoConfigsOnePairThreeRepsGiveSixTranscripts) {
  RunOptions opts{dir_ / "run", roster("spe:spe"), 3, 1, 42};
  const auto result = run_batch(expand_grid(two_bargaining_cells()), opts);
  EXPECT_EQ(result.planned, 6);
  EXPECT_EQ(result.played, 6);
  EXPECT_EQ(result.resumed, 0);
  EXPECT_EQ(count_files(dir_ / "run" / "games", ".jsonl"), 6u);
  const auto ledger = read_ledger(dir_ / "run");
  EXPECT_EQ(ledger.games.size(), 6u);
  EXPECT_EQ(ledger.run_id, "run");
  EXPECT_EQ(ledger.seed, 42u);
  for (const auto& [cell, n] : ledger.cell_counts()) EXPECT_EQ(n, 3) << cell;
  EXPECT_EQ(ledger.status_counts().at(GameStatus::Done), 6);
}

TEST_F(ScratchDir, SpeVersusSpeOnInfiniteCellsAgreesInRoundOne) {
  RunOptions opts{dir_ / "run", roster("spe:spe"), 5, 2, 7};
  run_batch(expand_grid(two_bargaining_cells()), opts);
  for (const auto& t : load_run_transcripts(dir_ / "run")) {
    ASSERT_TRUE(t.outcome);
    EXPECT_EQ(std::get<BargainingOutcome>(*t.outcome).agreed_round, 1);
  }
}

TEST_F(ScratchDir, ResumeAfterInterruptPlaysOnlyTheRest) {
  const auto grid = expand_grid(two_bargaining_cells());
  RunOptions opts{dir_ / "run", roster("spe:spe"), 3, 1, 42};
  int done = 0;
  opts.crash_hook = [&](std::string_view point, const std::string&) {
    if (point == "after_ledger" && ++done == 3) throw Interrupt{};
  };
  EXPECT_THROW(run_batch(grid, opts), Interrupt);
  EXPECT_EQ(count_files(dir_ / "run" / "games", ".jsonl"), 3u);

  opts.crash_hook = nullptr;
  const auto result = run_batch(grid, opts);
  EXPECT_EQ(result.resumed, 3);
  EXPECT_EQ(result.played, 3);
  EXPECT_EQ(result.ledger.games.size(), 6u);
  EXPECT_EQ(read_ledger(dir_ / "run").games.size(), 6u);

  const auto again = run_batch(grid, opts);
  EXPECT_EQ(again.played, 0);
  EXPECT_EQ(again.resumed, 6);
}

TEST_F(ScratchDir, CrashBetweenRenameAndLedgerIsBackfilled) {
  const auto grid = expand_grid(two_bargaining_cells());
  RunOptions opts{dir_ / "run", roster("spe:spe"), 1, 1, 3};
  opts.crash_hook = [&](std::string_view point, const std::string&) {
    if (point == "after_rename") throw Interrupt{};
  };
  EXPECT_THROW(run_batch(grid, opts), Interrupt);
  EXPECT_EQ(read_ledger(dir_ / "run").games.size(), 0u);
  EXPECT_EQ(count_files(dir_ / "run" / "games", ".jsonl"), 1u);

  opts.crash_hook = nullptr;
  const auto result = run_batch(grid, opts);
  EXPECT_EQ(result.resumed, 1);
  EXPECT_EQ(result.played, 1);
  EXPECT_EQ(read_ledger(dir_ / "run").games.size(), 2u);
}

TEST_F(ScratchDir, CrashBeforeRenameLeavesNoTranscript) {
  const auto grid = expand_grid(two_bargaining_cells());
  RunOptions opts{dir_ / "run", roster("spe:spe"), 1, 1, 3};
  opts.crash_hook = [&](std::string_view point, const std::string&) {
    if (point == "before_rename") throw Interrupt{};
  };
  EXPECT_THROW(run_batch(grid, opts), Interrupt);
  EXPECT_EQ(count_files(dir_ / "run" / "games", ".jsonl"), 0u);
  EXPECT_EQ(count_files(dir_ / "run" / "games", ".tmp"), 1u);

  opts.crash_hook = nullptr;
  const auto result = run_batch(grid, opts);
  EXPECT_EQ(result.played, 2);
  EXPECT_EQ(count_files(dir_ / "run" / "games", ".tmp"), 0u);
}

TEST_F(ScratchDir, PartialLedgerLineIsTruncated) {
  const auto grid = expand_grid(two_bargaining_cells());
  RunOptions opts{dir_ / "run", roster("spe:spe"), 1, 1, 3};
  run_batch(grid, opts);
  {
    std::ofstream out(dir_ / "run" / "ledger", std::ios::app);
    out << R"({"type":"game","game_id":"dead)";
  }
  const auto result = run_batch(grid, opts);
  EXPECT_EQ(result.played, 0);
  EXPECT_EQ(read_ledger(dir_ / "run").games.size(), 2u);
}

TEST_F(ScratchDir, ResumingAgainstDifferentRunIsLedgerMismatch) {
  const auto grid = expand_grid(two_bargaining_cells());
  RunOptions opts{dir_ / "run", roster("spe:spe"), 1, 1, 3};
  run_batch(grid, opts);

  auto other_grid = grid;
  other_grid.pop_back();
  EXPECT_THROW(run_batch(other_grid, opts), LedgerMismatch);
  auto other_seed = opts;
  other_seed.seed = 4;
  EXPECT_THROW(run_batch(grid, other_seed), LedgerMismatch);
  auto other_reps = opts;
  other_reps.repetitions = 2;
  EXPECT_THROW(run_batch(grid, other_reps), LedgerMismatch);
  auto other_roster = opts;
  other_roster.roster = roster("bi:bi");
  EXPECT_THROW(run_batch(grid, other_roster), LedgerMismatch);
}

TEST_F(ScratchDir, ParallelAndSerialRunsProduceTheSameTranscripts) {
  const auto grid = expand_grid(grid_from_json(json::parse(R"({
    "bargaining": {"delta_a": [0.9, 0.8], "delta_b": [0.9], "money": [100], "horizon": [3, "inf"],
                   "complete_info": [true], "messages_allowed": [false]},
    "negotiation": {"f_a": [0.8], "f_b": [1.2], "money": [1000], "horizon": [4],
                    "complete_info": [true, false], "messages_allowed": [true]},
    "persuasion": {"prior_p": [0.5], "value_v": [1.25], "money": [100], "horizon": [6],
                   "complete_info": [true], "message_mode": ["binary", "text"], "buyer_mode": ["long_living"]}})")));
  std::vector<AgentPair> pairs{parse_agent_pair("random:random"), parse_agent_pair("accept:random")};
  RunOptions serial{dir_ / "serial", pairs, 3, 1, 11};
  RunOptions parallel{dir_ / "parallel", pairs, 3, 4, 11};
  run_batch(grid, serial);
  run_batch(grid, parallel);
  const auto a = load_run_transcripts(dir_ / "serial");
  const auto b = load_run_transcripts(dir_ / "parallel");
  ASSERT_EQ(a.size(), b.size());
  ASSERT_EQ(a.size(), grid.size() * 2 * 3);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(canonical(a[i]), canonical(b[i]));
}

TEST_F(ScratchDir, PersistedMetricsEqualReplayedMetrics) {
  const auto grid = expand_grid(load_grid(kDefaultGrid));
  std::vector<GameConfig> sample;
  for (std::size_t i = 0; i < grid.size(); i += 37) sample.push_back(grid[i]);
  RunOptions opts{dir_ / "run", roster("random:random"), 1, 4, 5};
  run_batch(sample, opts);
  const auto transcripts = load_run_transcripts(dir_ / "run");
  ASSERT_EQ(transcripts.size(), sample.size());
  for (const auto& t : transcripts) EXPECT_TRUE(verify_replay(t).matches) << t.game_id;
}

class FailingAgent : public Agent {
 public:
  Action act(const Observation&) override { throw TransportError("connection refused"); }
};

class IllegalAgent : public Agent {
 public:
  Action act(const Observation& obs) override {
    if (obs.shape->kind == ActionKind::ProposeSplit) return ProposeSplit{obs.money + 1, std::nullopt};
    return Respond{false};
  }
};

class AuthFailingAgent : public Agent {
 public:
  Action act(const Observation&) override { throw AuthError("bad token"); }
};

template <typename A>
AgentFactory factory_with_alice() {
  return [](const AgentSpec& spec, const GameConfig& config, Player role, std::uint64_t seed,
            const std::string&) -> std::unique_ptr<Agent> {
    if (role == Player::Alice) return std::make_unique<A>();
    return make_scripted_agent(spec, config.family(), role, seed);
  };
}

GameTask single_task() {
  const auto configs = expand_grid(two_bargaining_cells());
  return plan_tasks({configs[0]}, roster("spe:spe"), 1, 0).tasks.at(0);
}

TEST(PlayGame, TransportFailureMarksGameFailed) {
  const auto t = play_game(single_task(), factory_with_alice<FailingAgent>());
  EXPECT_EQ(t.status, GameStatus::Failed);
  EXPECT_TRUE(t.excluded);
  EXPECT_FALSE(t.outcome);
  EXPECT_FALSE(t.metrics);
  EXPECT_NE(t.error.find("connection refused"), std::string::npos);
  // Still a well-formed, replayable transcript.
  EXPECT_TRUE(verify_replay(parse_transcript(to_jsonl(t))).matches);
}

TEST(PlayGame, IllegalActionFallsBackAndDegrades) {
  const auto t = play_game(single_task(), factory_with_alice<IllegalAgent>());
  EXPECT_EQ(t.status, GameStatus::Degraded);
  EXPECT_TRUE(t.excluded);
  ASSERT_TRUE(t.outcome);
  EXPECT_TRUE(verify_replay(t).matches);
  const auto& first = std::get<ProposeSplit>(t.events.at(0).event.action);
  EXPECT_EQ(first.alice_amount, 5000);  // 50/50 forfeit offer
}

TEST_F(ScratchDir, AuthErrorAbortsTheRun) {
  RunOptions opts{dir_ / "run", roster("spe:spe"), 2, 2, 0};
  opts.factory = factory_with_alice<AuthFailingAgent>();
  EXPECT_THROW(run_batch(expand_grid(two_bargaining_cells()), opts), AuthError);
  EXPECT_EQ(count_files(dir_ / "run" / "games", ".jsonl"), 0u);
}

TEST_F(ScratchDir, HumanSeatsAreRejectedForBatchRuns) {
  RunOptions opts{dir_ / "run", roster("human:spe"), 1, 1, 0};
  EXPECT_THROW(run_batch(expand_grid(two_bargaining_cells()), opts), InvalidAgentSpec);
}

TEST(Summarize, CountsDecisionsMessagesAndWords) {
  Transcript t;
  t.game_id = "g";
  t.config = testing::bargaining(0.9, 0.9, 100, Horizon::finite(3), true, true);
  t.events.push_back({Event{1, Player::Alice,
                            ProposeSplit{50, std::string("one two three four five six seven eight nine ten eleven twelve")}},
                      ""});
  t.events.push_back({Event{1, Player::Bob, Respond{true}}, ""});
  const auto rows = summarize({t});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], (FamilyStats{GameFamily::Bargaining, 1, 2, 1, 12, 0}));
  EXPECT_EQ(rows[1], (FamilyStats{GameFamily::Negotiation, 0, 0, 0, 0, 0}));
  EXPECT_EQ(rows[2], (FamilyStats{GameFamily::Persuasion, 0, 0, 0, 0, 0}));
}

TEST(Summarize, BlankMessagesAreNotCounted) {
  Transcript t;
  t.config = testing::negotiation(0.8, 1.2, 100, Horizon::finite(3), true, true);
  t.events.push_back({Event{1, Player::Alice, ProposePrice{90, std::string("  ")}}, ""});
  const auto rows = summarize({t});
  EXPECT_EQ(rows[1], (FamilyStats{GameFamily::Negotiation, 1, 1, 0, 0, 0}));
}

TEST_F(ScratchDir, SummaryOfPersistedRunIsStable) {
  const auto grid = expand_grid(two_bargaining_cells());
  RunOptions opts{dir_ / "run", roster("random:random"), 4, 2, 9};
  run_batch(grid, opts);
  const auto first = summarize_run(dir_ / "run");
  EXPECT_EQ(first[0].games, 8);
  EXPECT_EQ(first, summarize_run(dir_ / "run"));
  // Rebuild every transcript's events from a replay of its own actions.
  std::vector<Transcript> replayed;
  for (const auto& t : load_run_transcripts(dir_ / "run")) {
    std::vector<Event> events;
    for (const auto& e : t.events) events.push_back(e.event);
    const auto state = replay(t.config, t.seed, events);
    auto copy = t;
    copy.events.clear();
    for (const auto& e : state.history) copy.events.push_back({e, ""});
    replayed.push_back(copy);
  }
  EXPECT_EQ(first, summarize(replayed));
  EXPECT_NE(format_summary(first).find("bargaining"), std::string::npos);
}

}  // namespace
}  // namespace arena

namespace arena {
namespace {

TEST(Oracle, GridFidelity) {
  const auto r = oracles::grid_fidelity(kDefaultGrid.string());
  EXPECT_TRUE(r.ok) << r.detail;
}

TEST(Oracle, CrashConsistentResume) {
  const auto r = oracles::crash_consistent_resume(std::filesystem::temp_directory_path().string());
  EXPECT_TRUE(r.ok) << r.detail;
  std::cout << r.detail << "\n";
}

}  // namespace
}  // namespace arena
