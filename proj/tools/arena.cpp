#include <pthread.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "arena/analysis/regression.hpp"
#include "arena/errors.hpp"
#include "arena/llm/llm_agent.hpp"
#include "arena/orchestrator/grid.hpp"
#include "arena/orchestrator/run.hpp"
#include "arena/session/server.hpp"
#include "arena/session/session.hpp"

namespace fs = std::filesystem;
using namespace arena;

namespace {

struct RunArgs {
  std::string grid;
  std::vector<std::string> pairs;
  std::optional<int> reps;
  int parallelism = 1;
  std::string out;
  std::string run_id;
  std::string providers;
  std::string audit;
};

struct AnalyzeArgs {
  std::string run_dir;
  std::string family = "bargaining";
  std::string metric = "fairness";
  std::string mode = "per-player";
  std::string csv;
  int validate = 0;
  bool include_excluded = false;
};

struct ServeArgs {
  std::string bind = "127.0.0.1:8080";
  std::string config_dir;
  std::string roster = "spe,bi,commitment,bayes_buyer";
  std::string transcript_dir;
  int opponent_timeout_ms = 30'000;
  std::string providers;
};

AgentFactory factory_for(const std::string& providers, const std::string& audit) {
  if (providers.empty()) return scripted_agent_factory();
  auto log = audit.empty() ? nullptr : std::make_shared<AuditLog>(audit);
  return make_agent_factory(std::make_shared<ChatClientPool>(ProviderRegistry::load(providers), nullptr, log));
}

int cmd_run(const RunArgs& a, std::uint64_t seed) {
  const GridSpec spec = load_grid(a.grid);
  const auto grid = expand_grid(spec);
  RunOptions opts;
  opts.run_dir = a.run_id.empty() ? fs::path(a.out) : fs::path(a.out) / a.run_id;
  for (const auto& p : a.pairs) opts.roster.push_back(parse_agent_pair(p));
  if (opts.roster.empty()) opts.roster = spec.roster;
  if (opts.roster.empty()) throw InvalidAgentSpec("no agent pair: pass --pair or set \"roster\" in the grid file");
  opts.repetitions = a.reps.value_or(spec.repetitions);
  opts.parallelism = a.parallelism;
  opts.seed = seed;
  opts.factory = factory_for(a.providers, a.audit);
  const RunResult r = run_batch(grid, opts);
  const auto statuses = r.ledger.status_counts();
  auto count = [&](GameStatus s) {
    const auto it = statuses.find(s);
    return it == statuses.end() ? 0 : it->second;
  };
  fmt::print("run {}: {} configurations, {} games planned, {} played, {} resumed, {} incompatible cells skipped\n",
             opts.run_dir.string(), grid.size(), r.planned, r.played, r.resumed, r.incompatible_cells);
  fmt::print("status: {} done, {} degraded, {} failed\n", count(GameStatus::Done), count(GameStatus::Degraded),
             count(GameStatus::Failed));
  return 0;
}

int cmd_analyze(const AnalyzeArgs& a, std::uint64_t seed) {
  const GameFamily family = parse_family(a.family);
  const Metric metric = parse_metric(a.metric);
  std::vector<Transcript> games;
  for (auto& t : load_run_transcripts(a.run_dir)) {
    if (t.config.family() == family) games.push_back(std::move(t));
  }
  EncodeOptions opts;
  opts.mode = parse_encode_mode(a.mode);
  opts.include_excluded = a.include_excluded;
  const EncodedData data = encode(games, metric, opts);
  const FitResult fit = fit_ols(data);
  std::vector<RmseSummary> validation;
  if (a.validate > 0) validation = validate_rmse(games, metric, seed, a.validate, opts);
  fmt::print("{}", format_report(data, fit, validation));
  if (a.csv == "-") {
    write_effects_csv(std::cout, data, fit);
  } else if (!a.csv.empty()) {
    std::ofstream out(a.csv);
    if (!out) throw std::runtime_error("cannot write " + a.csv);
    write_effects_csv(out, data, fit);
  }
  return 0;
}

int cmd_replay(const std::string& file) {
  const Transcript t = read_transcript(file);
  const ReplayResult r = verify_replay(t);
  json out{{"game_id", t.game_id},
           {"status", std::string(to_string(t.status))},
           {"events", t.events.size()},
           {"matches", r.matches}};
  if (r.state.terminal) out["outcome"] = to_json(*r.state.terminal);
  if (r.metrics) out["metrics"] = to_json(*r.metrics);
  if (t.metrics) out["stored_metrics"] = to_json(*t.metrics);
  fmt::print("{}\n", out.dump(2));
  if (!r.matches && t.status != GameStatus::Failed) {
    throw TranscriptError("replayed outcome differs from the stored one");
  }
  return 0;
}

int cmd_summarize(const std::string& run_dir) {
  fmt::print("{}", format_summary(summarize_run(run_dir)));
  return 0;
}

int cmd_serve(const ServeArgs& a, std::uint64_t seed) {
  const auto colon = a.bind.rfind(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--bind", "expected host:port");
  const std::string host = a.bind.substr(0, colon);
  const int port = std::stoi(a.bind.substr(colon + 1));

  SessionOptions opts;
  opts.seed = seed;
  opts.roster = parse_agent_list(a.roster);
  opts.factory = factory_for(a.providers, "");
  opts.opponent_timeout = std::chrono::milliseconds(a.opponent_timeout_ms);
  if (!a.transcript_dir.empty()) opts.transcript_dir = a.transcript_dir;
  SessionManager sessions(load_config_catalog(a.config_dir), opts);
  SessionServer server(sessions);
  const int bound = server.bind(host, port);
  if (bound <= 0) throw TransportError(fmt::format("cannot bind {}", a.bind));
  fmt::print("listening on {}:{} with {} configurations\n", host, bound, sessions.list_configs().size());
  std::fflush(stdout);
  // SIGINT / SIGTERM are taken synchronously by a watcher thread.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  std::thread watcher([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.listen();
  // Wake the watcher when the server stopped for another reason.
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-player economic game arena: batch runs, analysis, human sessions, replay."};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Root seed; all randomness derives from it")->capture_default_str();

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Play every configuration of a grid with each agent pair");
  run_cmd->add_option("--grid", run.grid, "Grid file (JSON, format below)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--pair", run.pairs, "Agent pair alice:bob, e.g. spe:spe (repeatable; default: grid roster)");
  run_cmd->add_option("--reps", run.reps, "Repetitions per configuration and pair (default: grid value)")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--parallelism", run.parallelism, "Concurrent games")->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", run.out, "Run directory (resumed when it exists)")->required();
  run_cmd->add_option("--run-id", run.run_id, "Sub-directory of --out to use as the run directory");
  run_cmd->add_option("--providers", run.providers, "LLM provider registry (JSON) for llm:<alias> agents")
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--audit", run.audit, "Append every chat request/response to this JSONL file");
  run_cmd->footer(std::string(grid_format_help()));

  AnalyzeArgs analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Fit the effect regression over a run's transcripts");
  analyze_cmd->add_option("run_dir", analyze.run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  analyze_cmd->add_option("--family", analyze.family, "bargaining | negotiation | persuasion")->capture_default_str();
  analyze_cmd->add_option("--metric", analyze.metric, "efficiency | fairness | self_gain_alice | self_gain_bob")
      ->capture_default_str();
  analyze_cmd->add_option("--mode", analyze.mode, "Agent encoding: per-player | pair")->capture_default_str();
  analyze_cmd->add_option("--csv", analyze.csv, "Write the effect table as CSV ('-' for stdout)");
  analyze_cmd->add_option("--validate", analyze.validate, "Hold-out RMSE over this many random 80/20 splits")
      ->check(CLI::NonNegativeNumber);
  analyze_cmd->add_flag("--include-excluded", analyze.include_excluded, "Keep failed, degraded and disqualified games");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP session service for human participants");
  serve_cmd->add_option("--bind", serve.bind, "host:port (port 0 picks a free one)")->capture_default_str();
  serve_cmd->add_option("--config-dir", serve.config_dir, "Directory of grid files or single configurations")
      ->required()
      ->check(CLI::ExistingDirectory);
  serve_cmd->add_option("--roster", serve.roster, "Comma-separated opponent specs")->capture_default_str();
  serve_cmd->add_option("--transcript-dir", serve.transcript_dir, "Where session transcripts are written");
  serve_cmd->add_option("--opponent-timeout-ms", serve.opponent_timeout_ms, "Bound on one opponent move")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  serve_cmd->add_option("--providers", serve.providers, "LLM provider registry (JSON)")->check(CLI::ExistingFile);

  std::string replay_file;
  auto* replay_cmd = app.add_subcommand("replay", "Replay a transcript and compare outcome and metrics");
  replay_cmd->add_option("file", replay_file, "Transcript (.jsonl)")->required()->check(CLI::ExistingFile);

  std::string summary_dir;
  auto* summarize_cmd = app.add_subcommand("summarize", "Per-family game, decision, message and word counts");
  summarize_cmd->add_option("run_dir", summary_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fmt::print(stderr, "error: UsageError: {}\n", e.what());
    return 2;
  }

  try {
    if (*run_cmd) return cmd_run(run, seed);
    if (*analyze_cmd) return cmd_analyze(analyze, seed);
    if (*serve_cmd) return cmd_serve(serve, seed);
    if (*replay_cmd) return cmd_replay(replay_file);
    if (*summarize_cmd) return cmd_summarize(summary_dir);
  } catch (const CLI::ValidationError& e) {
    fmt::print(stderr, "error: UsageError: {}\n", e.what());
    return 2;
  } catch (const ArenaError& e) {
    fmt::print(stderr, "error: {}: {}\n", e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: RuntimeError: {}\n", e.what());
    return 1;
  }
  return 2;
}
