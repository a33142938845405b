#include "arena/orchestrator/run.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "arena/core/json.hpp"
#include "arena/core/observation.hpp"
#include "arena/errors.hpp"
#include "arena/util/rng.hpp"
#include "arena/util/text.hpp"

namespace arena {

namespace fs = std::filesystem;

std::uint64_t game_seed(std::uint64_t run_seed, const std::string& config_id, const AgentPair& pair, int rep) {
  return combine_seeds({run_seed, seed_from_text(config_id), seed_from_text(pair_to_string(pair)),
                        static_cast<std::uint64_t>(rep)});
}

std::string make_game_id(std::uint64_t run_seed, const std::string& config_id, const AgentPair& pair, int rep) {
  return sha256_hex(fmt::format("{}|{}|{}|{}", config_id, pair_to_string(pair), rep, run_seed)).substr(0, 16);
}

TaskPlan plan_tasks(const std::vector<GameConfig>& grid, const std::vector<AgentPair>& roster, int repetitions,
                    std::uint64_t run_seed) {
  if (repetitions < 1) throw InvalidConfig("repetitions must be >= 1");
  if (roster.empty()) throw InvalidAgentSpec("roster is empty");
  TaskPlan plan;
  for (const auto& config : grid) {
    for (const auto& pair : roster) {
      try {
        check_compatible(pair.first, config.family(), Player::Alice);
        check_compatible(pair.second, config.family(), Player::Bob);
      } catch (const UnsupportedFamily&) {
        ++plan.incompatible_cells;
        continue;
      }
      for (int rep = 0; rep < repetitions; ++rep) {
        plan.tasks.push_back(GameTask{config, pair, rep, make_game_id(run_seed, config.config_id, pair, rep),
                                      game_seed(run_seed, config.config_id, pair, rep)});
      }
    }
  }
  return plan;
}

Transcript play_game(const GameTask& task, const AgentFactory& factory) {
  Transcript t;
  t.game_id = task.game_id;
  t.config = task.config;
  t.seed = task.seed;
  t.alice_agent = task.pair.first.to_string();
  t.bob_agent = task.pair.second.to_string();

  GameState state = new_game(task.config, task.seed);
  t.qualities = state.qualities;
  bool degraded = false;
  try {
    auto alice = factory(task.pair.first, task.config, Player::Alice, combine_seeds({task.seed, 1}), task.game_id);
    auto bob = factory(task.pair.second, task.config, Player::Bob, combine_seeds({task.seed, 2}), task.game_id);
    while (!state.is_terminal()) {
      Agent& agent = state.turn == Player::Alice ? *alice : *bob;
      const Observation obs = observe(state, state.turn);
      Action action = agent.act(obs);
      GameState next;
      try {
        next = apply_action(state, action);
      } catch (const IllegalAction&) {
        degraded = true;
        action = safe_default_action(obs);
        next = apply_action(state, action);
      } catch (const MessageNotAllowed&) {
        degraded = true;
        action = safe_default_action(obs);
        next = apply_action(state, action);
      }
      t.events.push_back(TimedEvent{next.history.back(), utc_timestamp()});
      state = std::move(next);
    }
    degraded = degraded || alice->degraded() || bob->degraded();
  } catch (const TransportError& e) {
    t.status = GameStatus::Failed;
    t.excluded = true;
    t.error = fmt::format("TransportError: {}", e.what());
    return t;
  }
  t.outcome = state.terminal;
  t.metrics = compute_metrics(*state.terminal, task.config);
  t.status = degraded ? GameStatus::Degraded : GameStatus::Done;
  t.excluded = degraded;
  return t;
}

std::map<std::string, int> RunLedger::cell_counts() const {
  std::map<std::string, int> out;
  for (const auto& g : games) ++out[g.config_id + "|" + g.pair];
  return out;
}

std::map<GameStatus, int> RunLedger::status_counts() const {
  std::map<GameStatus, int> out;
  for (const auto& g : games) ++out[g.status];
  return out;
}

namespace {

constexpr const char* kLedgerName = "ledger";

json header_json(const RunLedger& l) {
  return json{{"type", "run"},           {"run_id", l.run_id},           {"grid_hash", l.grid_hash},
              {"seed", l.seed},          {"repetitions", l.repetitions}, {"roster", l.roster}};
}

json entry_json(const LedgerEntry& e) {
  return json{{"type", "game"}, {"game_id", e.game_id}, {"config_id", e.config_id},
              {"pair", e.pair}, {"rep", e.rep},         {"status", std::string(to_string(e.status))}};
}

// Drops a partially written trailing line left by a crash mid-append.
void truncate_partial_tail(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  const auto last_nl = data.rfind('\n');
  const std::size_t keep = last_nl == std::string::npos ? 0 : last_nl + 1;
  if (keep != data.size()) fs::resize_file(path, keep);
}

RunLedger parse_ledger(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw TranscriptError(fmt::format("cannot open ledger {}", path.string()));
  RunLedger l;
  bool have_header = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto rec = json::parse(line);
      const auto type = rec.at("type").get<std::string>();
      if (type == "run") {
        l.run_id = rec.at("run_id").get<std::string>();
        l.grid_hash = rec.at("grid_hash").get<std::string>();
        l.seed = rec.at("seed").get<std::uint64_t>();
        l.repetitions = rec.at("repetitions").get<int>();
        l.roster = rec.at("roster").get<std::vector<std::string>>();
        have_header = true;
      } else if (type == "game") {
        l.games.push_back(LedgerEntry{rec.at("game_id").get<std::string>(), rec.at("config_id").get<std::string>(),
                                      rec.at("pair").get<std::string>(), rec.at("rep").get<int>(),
                                      parse_status(rec.at("status").get<std::string>())});
      }
    } catch (const json::exception& e) {
      throw TranscriptError(fmt::format("{}:{}: malformed ledger line: {}", path.string(), line_no, e.what()));
    }
  }
  if (!have_header) throw TranscriptError(fmt::format("{}: missing run header", path.string()));
  return l;
}

// Single serialized appender; every line is fsynced before returning.
class LedgerWriter {
 public:
  explicit LedgerWriter(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd_ < 0) throw TranscriptError(fmt::format("cannot open ledger {}", path.string()));
  }
  ~LedgerWriter() { ::close(fd_); }
  LedgerWriter(const LedgerWriter&) = delete;
  LedgerWriter& operator=(const LedgerWriter&) = delete;

  void append(const json& record) {
    const std::string line = record.dump() + "\n";
    std::lock_guard lock(mu_);
    std::size_t done = 0;
    while (done < line.size()) {
      const auto n = ::write(fd_, line.data() + done, line.size() - done);
      if (n < 0) throw TranscriptError("ledger write failed");
      done += static_cast<std::size_t>(n);
    }
    ::fsync(fd_);
  }

 private:
  int fd_ = -1;
  std::mutex mu_;
};

void check_matches(const RunLedger& stored, const RunLedger& wanted) {
  auto mismatch = [](const char* what, const std::string& a, const std::string& b) {
    throw LedgerMismatch(fmt::format("existing run has {} {}, requested {}", what, a, b));
  };
  if (stored.grid_hash != wanted.grid_hash) mismatch("grid hash", stored.grid_hash, wanted.grid_hash);
  if (stored.seed != wanted.seed) mismatch("seed", std::to_string(stored.seed), std::to_string(wanted.seed));
  if (stored.repetitions != wanted.repetitions) {
    mismatch("repetitions", std::to_string(stored.repetitions), std::to_string(wanted.repetitions));
  }
  if (stored.roster != wanted.roster) {
    mismatch("roster", fmt::format("[{}]", fmt::join(stored.roster, " ")),
             fmt::format("[{}]", fmt::join(wanted.roster, " ")));
  }
}

bool readable_transcript(const fs::path& path) {
  try {
    read_transcript(path);
    return true;
  } catch (const ArenaError&) {
    return false;
  }
}

}  // namespace

RunLedger read_ledger(const fs::path& run_dir) { return parse_ledger(run_dir / kLedgerName); }

RunResult run_batch(const std::vector<GameConfig>& grid, const RunOptions& options) {
  if (options.parallelism < 1) throw InvalidConfig("parallelism must be >= 1");
  for (const auto& [a, b] : options.roster) {
    if (a.kind == AgentKind::Human || b.kind == AgentKind::Human) {
      throw InvalidAgentSpec("human seats are served by the session service, not batch runs");
    }
  }
  const TaskPlan plan = plan_tasks(grid, options.roster, options.repetitions, options.seed);

  RunLedger wanted;
  wanted.run_id = options.run_dir.filename().string();
  wanted.grid_hash = grid_hash(grid);
  wanted.seed = options.seed;
  wanted.repetitions = options.repetitions;
  for (const auto& p : options.roster) wanted.roster.push_back(pair_to_string(p));

  const fs::path games_dir = options.run_dir / "games";
  fs::create_directories(games_dir);
  const fs::path ledger_path = options.run_dir / kLedgerName;

  RunLedger ledger = wanted;
  bool fresh = true;
  if (fs::exists(ledger_path)) {
    truncate_partial_tail(ledger_path);
    if (fs::file_size(ledger_path) > 0) {
      ledger = parse_ledger(ledger_path);
      check_matches(ledger, wanted);
      fresh = false;
    }
  }
  LedgerWriter writer(ledger_path);
  if (fresh) writer.append(header_json(wanted));

  // Temporaries from an interrupted write never became transcripts.
  for (const auto& entry : fs::directory_iterator(games_dir)) {
    if (entry.path().extension() == ".tmp") fs::remove(entry.path());
  }

  std::set<std::string> ledgered;
  for (const auto& g : ledger.games) ledgered.insert(g.game_id);

  RunResult result;
  result.planned = static_cast<int>(plan.tasks.size());
  result.incompatible_cells = plan.incompatible_cells;

  std::mutex ledger_mu;
  auto record = [&](const GameTask& task, GameStatus status) {
    LedgerEntry e{task.game_id, task.config.config_id, pair_to_string(task.pair), task.rep, status};
    writer.append(entry_json(e));
    std::lock_guard lock(ledger_mu);
    ledger.games.push_back(std::move(e));
  };

  std::vector<const GameTask*> todo;
  for (const auto& task : plan.tasks) {
    const fs::path path = games_dir / (task.game_id + ".jsonl");
    if (fs::exists(path) && readable_transcript(path)) {
      ++result.resumed;
      // The transcript landed but the crash came before its ledger line.
      if (!ledgered.count(task.game_id)) record(task, read_transcript(path).status);
      continue;
    }
    todo.push_back(&task);
  }

  auto hook = [&](std::string_view point, const std::string& id) {
    if (options.crash_hook) options.crash_hook(point, id);
  };

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::atomic<int> played{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  std::mutex callback_mu;

  auto worker = [&] {
    while (!stop) {
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      const GameTask& task = *todo[i];
      try {
        const Transcript t = play_game(task, options.factory);
        hook("before_write", task.game_id);
        write_file_atomic(games_dir / (task.game_id + ".jsonl"), to_jsonl(t),
                          [&] { hook("before_rename", task.game_id); });
        hook("after_rename", task.game_id);
        record(task, t.status);
        hook("after_ledger", task.game_id);
        ++played;
        if (options.on_game) {
          std::lock_guard lock(callback_mu);
          options.on_game(t);
        }
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        stop = true;
      }
    }
  };

  const int workers = std::min<int>(options.parallelism, std::max<int>(1, static_cast<int>(todo.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  result.played = played;
  result.ledger = std::move(ledger);
  return result;
}

std::vector<Transcript> load_run_transcripts(const fs::path& run_dir) {
  const fs::path games_dir = run_dir / "games";
  if (!fs::is_directory(games_dir)) throw TranscriptError(fmt::format("{} has no games directory", run_dir.string()));
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(games_dir)) {
    if (entry.path().extension() == ".jsonl") paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<Transcript> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(read_transcript(p));
  return out;
}

std::vector<FamilyStats> summarize(const std::vector<Transcript>& transcripts) {
  std::vector<FamilyStats> rows(3);
  for (int f = 0; f < 3; ++f) rows[static_cast<std::size_t>(f)].family = static_cast<GameFamily>(f);
  for (const auto& t : transcripts) {
    auto& row = rows[static_cast<std::size_t>(t.config.family())];
    ++row.games;
    if (t.excluded) ++row.excluded;
    for (const auto& e : t.events) {
      ++row.decisions;
      const auto& msg = message_of(e.event.action);
      if (msg && !trim(*msg).empty()) {
        ++row.messages;
        row.words += static_cast<int>(word_count(*msg));
      }
    }
  }
  return rows;
}

std::vector<FamilyStats> summarize_run(const fs::path& run_dir) { return summarize(load_run_transcripts(run_dir)); }

std::string format_summary(const std::vector<FamilyStats>& rows) {
  std::string out = fmt::format("{:<12} {:>10} {:>12} {:>10} {:>12} {:>9}\n", "family", "games", "decisions",
                                "messages", "words", "excluded");
  FamilyStats total;
  for (const auto& r : rows) {
    out += fmt::format("{:<12} {:>10} {:>12} {:>10} {:>12} {:>9}\n", to_string(r.family), r.games, r.decisions,
                       r.messages, r.words, r.excluded);
    total.games += r.games;
    total.decisions += r.decisions;
    total.messages += r.messages;
    total.words += r.words;
    total.excluded += r.excluded;
  }
  out += fmt::format("{:<12} {:>10} {:>12} {:>10} {:>12} {:>9}\n", "total", total.games, total.decisions,
                     total.messages, total.words, total.excluded);
  return out;
}

}  // namespace arena
