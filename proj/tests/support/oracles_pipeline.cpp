#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <set>

#include <fmt/format.h>

#include "arena/analysis/regression.hpp"
#include "arena/core/json.hpp"
#include "arena/errors.hpp"
#include "arena/llm/llm_agent.hpp"
#include "arena/orchestrator/grid.hpp"
#include "arena/orchestrator/run.hpp"
#include "arena/util/rng.hpp"
#include "oracles.hpp"

namespace arena::oracles {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Box-Muller on the arena's portable uniform draws.
double normal(Rng& rng, double sd) {
  constexpr double kTwoPi = 6.283185307179586;
  const double u1 = 1.0 - unit_uniform(rng);
  const double u2 = unit_uniform(rng);
  return sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& xs) {
  return xs[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(xs.size()) - 1))];
}

// Bargaining-shaped rows (metrics are placeholders; only the design is used).
std::vector<Transcript> synthetic_bargaining_games(int n, std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<double> deltas{0.8, 0.9, 0.95, 1.0};
  const std::vector<std::int64_t> money{100, 10'000, 1'000'000};
  const std::vector<Horizon> horizons{Horizon::finite(12), Horizon::unbounded()};
  const std::vector<std::string> agents{"spe", "bi", "random"};
  std::vector<Transcript> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Transcript t;
    t.game_id = std::to_string(i);
    t.config.params = BargainingConfig{pick(rng, deltas), pick(rng, deltas), pick(rng, money),
                                       pick(rng, horizons),  bernoulli(rng, 0.5), bernoulli(rng, 0.5)};
    t.alice_agent = pick(rng, agents);
    t.bob_agent = pick(rng, agents);
    t.metrics = MetricSet{};
    out.push_back(std::move(t));
  }
  return out;
}

double normal_equation_residual(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
  const double lhs = (X.transpose() * (y - X * beta)).cwiseAbs().maxCoeff();
  const double scale = (X.transpose() * y).cwiseAbs().maxCoeff();
  return lhs / scale;
}

}  // namespace

CheckResult grid_fidelity(const std::string& grid_path) {
  try {
    const auto configs = expand_grid(load_grid(grid_path));
    int counts[3] = {0, 0, 0};
    for (const auto& c : configs) ++counts[static_cast<int>(c.family())];
    const bool ok = counts[0] == 384 && counts[1] == 576 && counts[2] == 360 && configs.size() == 1320;
    return {ok, fmt::format("{} + {} + {} = {} configurations", counts[0], counts[1], counts[2], configs.size())};
  } catch (const ArenaError& e) {
    return {false, fmt::format("{}: {}", e.kind(), e.what())};
  }
}

CheckResult regression_recovery() {
  constexpr int kRows = 10'000;
  constexpr int kTrials = 200;
  constexpr double kNoiseSd = 0.1;  // variance 0.01

  const auto data = encode(synthetic_bargaining_games(kRows, 17), Metric::Efficiency);
  const Eigen::MatrixXd& X = data.design.X;
  const auto k = X.cols();

  Rng rng(2024);
  Eigen::VectorXd beta_star(k);
  for (Eigen::Index j = 0; j < k; ++j) beta_star(j) = unit_uniform(rng) - 0.5;

  int covered = 0;
  int within_3se_first = 0;
  double worst_residual = 0.0;
  double slowest_fit = 0.0;
  for (int trial = 0; trial < kTrials; ++trial) {
    Rng noise(combine_seeds({99, static_cast<std::uint64_t>(trial)}));
    Eigen::VectorXd y = X * beta_star;
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += normal(noise, kNoiseSd);
    const auto start = Clock::now();
    const FitResult fit = fit_ols(X, y, data.design.columns);
    slowest_fit = std::max(slowest_fit, seconds_since(start));
    worst_residual = std::max(worst_residual, normal_equation_residual(X, y, fit.beta));
    for (Eigen::Index j = 0; j < k; ++j) {
      if (fit.ci_low(j) <= beta_star(j) && beta_star(j) <= fit.ci_high(j)) ++covered;
      if (trial == 0 && std::abs(fit.beta(j) - beta_star(j)) <= 3.0 * fit.se(j)) ++within_3se_first;
    }
  }
  const double coverage = static_cast<double>(covered) / static_cast<double>(kTrials * k);

  // Market block of a 2x2x2 bargaining grid, encoded from games actually played.
  const auto grid = expand_grid(grid_from_json(json::parse(R"({
    "bargaining": {"delta_a": [0.9], "delta_b": [0.9], "money": [100], "horizon": [12, "inf"],
                   "complete_info": [true, false], "messages_allowed": [true, false]}})")));
  std::vector<Transcript> played;
  for (const auto& task : plan_tasks(grid, {parse_agent_pair("random:random")}, 2, 5).tasks) {
    played.push_back(play_game(task, scripted_agent_factory()));
  }
  const auto market = encode(played, Metric::Fairness).design.block("market");

  const bool ok = within_3se_first == k && coverage >= 0.93 && worst_residual <= 1e-8 && slowest_fit < 10.0 &&
                  market.levels.size() == 8;
  return {ok, fmt::format("{}/{} coefficients within 3 SE; CI coverage {:.4f} over {} trials; "
                          "normal-equation residual {:.2e}; slowest fit {:.3f} s; market levels {}",
                          within_3se_first, k, coverage, kTrials, worst_residual, slowest_fit,
                          market.levels.size())};
}

CheckResult crash_consistent_resume(const std::string& scratch_dir) {
  constexpr int kKills = 10;
  const auto grid = expand_grid(grid_from_json(json::parse(R"({
    "bargaining": {"delta_a": [0.8, 0.95], "delta_b": [0.9], "money": [100], "horizon": [4],
                   "complete_info": [true], "messages_allowed": [false]},
    "negotiation": {"f_a": [0.8], "f_b": [1.2], "money": [1000], "horizon": [3],
                    "complete_info": [true, false], "messages_allowed": [true]}})")));
  const std::vector<AgentPair> roster{parse_agent_pair("random:random")};
  constexpr int kReps = 3;
  const int total = static_cast<int>(plan_tasks(grid, roster, kReps, 1).tasks.size());
  // Four hook points per game.
  const int hook_events = 4 * total;

  const fs::path root = fs::path(scratch_dir) / fmt::format("resume_{}", ::getpid());
  fs::remove_all(root);
  fs::create_directories(root);

  RunOptions reference_opts{root / "reference", roster, kReps, 1, 1};
  run_batch(grid, reference_opts);
  std::map<std::string, std::string> reference;
  for (auto t : load_run_transcripts(root / "reference")) {
    for (auto& e : t.events) e.timestamp.clear();
    reference[t.game_id] = to_jsonl(t);
  }

  Rng rng(31337);
  std::vector<std::string> problems;
  std::string kill_log;
  for (int kill = 0; kill < kKills; ++kill) {
    const int kill_at = static_cast<int>(uniform_int(rng, 1, hook_events - 1));
    const int parallelism = kill % 2 == 0 ? 1 : 3;
    const fs::path run_dir = root / fmt::format("run{}", kill);
    RunOptions opts{run_dir, roster, kReps, parallelism, 1};

    const pid_t pid = ::fork();
    if (pid < 0) return {false, "fork failed"};
    if (pid == 0) {
      std::atomic<int> seen{0};
      opts.crash_hook = [&](std::string_view, const std::string&) {
        if (++seen == kill_at) ::_exit(137);
      };
      try {
        run_batch(grid, opts);
      } catch (...) {
        ::_exit(3);
      }
      ::_exit(0);
    }
    int status = 0;
    ::waitpid(pid, &status, 0);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 137) {
      problems.push_back(fmt::format("kill {}: child did not stop at hook event {}", kill, kill_at));
      continue;
    }

    // Every persisted transcript must be complete.
    int persisted = 0;
    for (const auto& entry : fs::directory_iterator(run_dir / "games")) {
      if (entry.path().extension() != ".jsonl") continue;
      try {
        read_transcript(entry.path());
        ++persisted;
      } catch (const ArenaError& e) {
        problems.push_back(fmt::format("kill {}: {} unreadable: {}", kill, entry.path().filename().string(), e.what()));
      }
    }

    const auto result = run_batch(grid, opts);
    if (result.resumed != persisted || result.played != total - persisted) {
      problems.push_back(fmt::format("kill {}: {} persisted, resume replayed {} and played {} of {}", kill, persisted,
                                     result.resumed, result.played, total));
    }
    const auto ledger = read_ledger(run_dir);
    std::set<std::string> ids;
    for (const auto& g : ledger.games) ids.insert(g.game_id);
    if (ledger.games.size() != static_cast<std::size_t>(total) || ids.size() != ledger.games.size()) {
      problems.push_back(fmt::format("kill {}: ledger has {} lines for {} distinct games", kill, ledger.games.size(),
                                     ids.size()));
    }
    for (auto t : load_run_transcripts(run_dir)) {
      for (auto& e : t.events) e.timestamp.clear();
      if (reference[t.game_id] != to_jsonl(t)) problems.push_back(fmt::format("kill {}: {} differs", kill, t.game_id));
    }
    kill_log += fmt::format("{}{}@{}", kill_log.empty() ? "" : " ", persisted, kill_at);
  }
  fs::remove_all(root);
  if (!problems.empty()) return {false, problems.front()};
  return {true, fmt::format("{} kills over {} games (persisted@hook-event: {}); resume completed exactly the rest",
                            kKills, total, kill_log)};
}

std::optional<CheckResult> live_smoke() {
  const char* endpoint = std::getenv("ARENA_LIVE_ENDPOINT");
  if (endpoint == nullptr || *endpoint == '\0') return std::nullopt;
  ProviderConfig provider;
  provider.alias = "live";
  provider.endpoint = endpoint;
  const char* model = std::getenv("ARENA_LIVE_MODEL");
  provider.model = model != nullptr ? model : "gpt-4o-mini";
  const char* auth = std::getenv("ARENA_LIVE_AUTH_ENV");
  provider.auth_env = auth != nullptr ? auth : "";
  provider.timeout_ms = 30'000;
  ProviderRegistry registry;
  registry.add(provider);
  const AgentFactory factory = make_agent_factory(std::make_shared<ChatClientPool>(registry));

  GameConfig config{BargainingConfig{0.9, 0.9, 100, Horizon::finite(6), true, true}, ""};
  config.config_id = config_content_id(config);
  const auto tasks = plan_tasks({config}, {parse_agent_pair("llm:live:spe")}, 1, 1).tasks;
  const auto start = Clock::now();
  try {
    const Transcript t = play_game(tasks.front(), factory);
    const double secs = seconds_since(start);
    // Completing, forfeiting unusable replies, or failing after the retry budget all count as graceful.
    const std::string detail = fmt::format("status {} after {} events in {:.1f} s{}", to_string(t.status),
                                           t.events.size(), secs, t.error.empty() ? "" : "; " + t.error);
    return CheckResult{true, detail};
  } catch (const ArenaError& e) {
    return CheckResult{false, fmt::format("{}: {}", e.kind(), e.what())};
  }
}

}  // namespace arena::oracles
