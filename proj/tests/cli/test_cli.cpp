#include <httplib.h>
#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "arena/core/json.hpp"
#include "arena/core/transcript.hpp"

namespace arena {
namespace {

namespace fs = std::filesystem;

struct Result {
  int exit = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           fmt::format("arena_cli_{}_{}", ::getpid(), ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result cli(const std::string& args) {
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = fmt::format("'{}' {} 2>'{}'", ARENA_CLI, args, err.string());
    Result r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    std::array<char, 4096> buf{};
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
    const int status = ::pclose(pipe);
    r.exit = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err);
    return r;
  }

  fs::path write(const std::string& name, const std::string& content) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << content;
    return p;
  }

  // 2 x 2 x 2 market cells and two discounts for Alice: 16 bargaining configurations.
  fs::path small_grid() {
    return write("small.grid.json", R"({
      "bargaining": {"delta_a": [0.9, 0.8], "delta_b": [0.9], "money": [100], "horizon": [12, "inf"],
                     "complete_info": [true, false], "messages_allowed": [true, false]},
      "negotiation": {"f_a": [0.8], "f_b": [1.2], "money": [1000], "horizon": [3],
                      "complete_info": [true], "messages_allowed": [false]}})");
  }

  static std::vector<fs::path> games(const fs::path& run_dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(run_dir / "games")) {
      if (e.path().extension() == ".jsonl") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  fs::path dir_;
};

TEST_F(Cli, HelpDocumentsGridFormat) {
  const auto r = cli("run --help");
  EXPECT_EQ(r.exit, 0);
  EXPECT_NE(r.out.find("Grid file format"), std::string::npos);
  EXPECT_NE(r.out.find("\"horizon\""), std::string::npos);
  const auto top = cli("--help");
  EXPECT_EQ(top.exit, 0);
  for (const char* sub : {"run", "analyze", "serve", "replay", "summarize"}) {
    EXPECT_NE(top.out.find(sub), std::string::npos) << sub;
  }
}

TEST_F(Cli, UsageErrorsExitTwoWithErrorLine) {
  for (const std::string args : {"", "bogus", "run --out x", "run --grid /no/such/file --out x",
                                 "replay", "run analyze", "analyze /no/such/dir"}) {
    const auto r = cli(args);
    EXPECT_EQ(r.exit, 2) << args;
    EXPECT_TRUE(std::regex_search(r.err, std::regex("^error: UsageError: ")) ) << args << ": " << r.err;
  }
}

TEST_F(Cli, RuntimeErrorsExitOneWithKind) {
  const auto bad = write("bad.grid.json", R"({"bargaining": {"delta_a": [1.5]}})");
  const auto r = cli(fmt::format("run --grid '{}' --pair random:random --out '{}'", bad.string(), (dir_ / "r").string()));
  EXPECT_EQ(r.exit, 1);
  EXPECT_TRUE(std::regex_search(r.err, std::regex("^error: GridFormatError: "))) << r.err;

  const auto grid = small_grid();
  const auto run_dir = dir_ / "run";
  ASSERT_EQ(cli(fmt::format("run --grid '{}' --pair spe:spe --out '{}'", grid.string(), run_dir.string())).exit, 0);
  const auto mismatch = cli(fmt::format("run --grid '{}' --pair spe:spe --reps 2 --out '{}'", grid.string(),
                                        run_dir.string()));
  EXPECT_EQ(mismatch.exit, 1);
  EXPECT_TRUE(std::regex_search(mismatch.err, std::regex("^error: LedgerMismatch: "))) << mismatch.err;

  const auto few = cli(fmt::format("analyze '{}' --family negotiation --metric efficiency", run_dir.string()));
  EXPECT_EQ(few.exit, 1);
  EXPECT_TRUE(std::regex_search(few.err, std::regex("^error: (TooFewGames|EmptyGrid): "))) << few.err;
}

TEST_F(Cli, RunWritesRepsTimesGridTranscripts) {
  const auto grid = small_grid();
  const auto out = dir_ / "runs";
  const auto r = cli(fmt::format("run --grid '{}' --pair random:random --reps 5 --parallelism 3 --out '{}' "
                                 "--run-id first --seed 11",
                                 grid.string(), out.string()));
  ASSERT_EQ(r.exit, 0) << r.err;
  EXPECT_EQ(games(out / "first").size(), 5u * 17u);
  EXPECT_NE(r.out.find("85 games planned, 85 played, 0 resumed"), std::string::npos) << r.out;

  // Re-running resumes without replaying anything.
  const auto again = cli(fmt::format("run --grid '{}' --pair random:random --reps 5 --out '{}' --run-id first --seed 11",
                                     grid.string(), out.string()));
  EXPECT_EQ(again.exit, 0);
  EXPECT_NE(again.out.find("0 played, 85 resumed"), std::string::npos) << again.out;
}

TEST_F(Cli, SameSeedSameTranscripts) {
  const auto grid = small_grid();
  for (const char* name : {"a", "b"}) {
    ASSERT_EQ(cli(fmt::format("--seed 5 run --grid '{}' --pair random:random --reps 2 --parallelism 4 --out '{}'",
                              grid.string(), (dir_ / name).string()))
                  .exit,
              0);
  }
  const auto a = games(dir_ / "a");
  const auto b = games(dir_ / "b");
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto ta = read_transcript(a[i]);
    auto tb = read_transcript(b[i]);
    for (auto* t : {&ta, &tb}) {
      for (auto& e : t->events) e.timestamp.clear();
    }
    EXPECT_EQ(to_jsonl(ta), to_jsonl(tb)) << a[i].filename();
  }
}

TEST_F(Cli, ReplayPrintsRecomputedMetricsEqualToStored) {
  const auto run_dir = dir_ / "run";
  ASSERT_EQ(cli(fmt::format("run --grid '{}' --pair random:random --out '{}'", small_grid().string(), run_dir.string()))
                .exit,
            0);
  for (const auto& g : games(run_dir)) {
    const auto r = cli(fmt::format("replay '{}'", g.string()));
    ASSERT_EQ(r.exit, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_TRUE(j["matches"].get<bool>());
    EXPECT_EQ(j["metrics"], j["stored_metrics"]);
  }
  // A tampered outcome is caught.
  const auto first = games(run_dir).front();
  std::string text = slurp(first);
  const auto pos = text.find("\"efficiency\":");
  ASSERT_NE(pos, std::string::npos);
  text.insert(pos + 13, "-");
  std::ofstream(first) << text;
  const auto tampered = cli(fmt::format("replay '{}'", first.string()));
  EXPECT_EQ(tampered.exit, 1);
  EXPECT_NE(tampered.err.find("error: "), std::string::npos);
}

TEST_F(Cli, AnalyzeMarketBlockHasSevenNonDefaultRows) {
  const auto run_dir = dir_ / "run";
  ASSERT_EQ(cli(fmt::format("run --grid '{}' --pair random:random --pair spe:random --pair random:spe --reps 4 --out '{}'",
                            small_grid().string(), run_dir.string()))
                .exit,
            0);
  const auto csv = dir_ / "effects.csv";
  const auto r = cli(fmt::format("analyze '{}' --family bargaining --metric fairness --csv '{}' --validate 3",
                                 run_dir.string(), csv.string()));
  ASSERT_EQ(r.exit, 0) << r.err;
  EXPECT_NE(r.out.find("market"), std::string::npos);
  EXPECT_NE(r.out.find("held-out RMSE"), std::string::npos);
  int market_rows = 0;
  int market_reference = 0;
  std::istringstream lines(slurp(csv));
  std::string line;
  while (std::getline(lines, line)) {
    if (line.rfind("bargaining,fairness,market,", 0) != 0) continue;
    (line.find(",true,") != std::string::npos ? market_reference : market_rows)++;
  }
  EXPECT_EQ(market_rows, 7);
  EXPECT_EQ(market_reference, 1);

  const auto pair = cli(fmt::format("analyze '{}' --family bargaining --metric efficiency --mode pair --csv -",
                                    run_dir.string()));
  EXPECT_EQ(pair.exit, 0) << pair.err;
  EXPECT_NE(pair.out.find("bargaining,efficiency,pair,"), std::string::npos);
}

TEST_F(Cli, SummarizeCountsGames) {
  const auto run_dir = dir_ / "run";
  ASSERT_EQ(cli(fmt::format("run --grid '{}' --pair random:random --reps 3 --out '{}'", small_grid().string(),
                            run_dir.string()))
                .exit,
            0);
  const auto r = cli(fmt::format("summarize '{}'", run_dir.string()));
  ASSERT_EQ(r.exit, 0);
  EXPECT_TRUE(std::regex_search(r.out, std::regex(R"(bargaining\s+48\s)"))) << r.out;
  EXPECT_TRUE(std::regex_search(r.out, std::regex(R"(negotiation\s+3\s)"))) << r.out;
  EXPECT_TRUE(std::regex_search(r.out, std::regex(R"(total\s+51\s)"))) << r.out;
}

TEST_F(Cli, ServeAnswersHttpAndStopsOnSigterm) {
  fs::create_directories(dir_ / "configs");
  fs::copy_file(small_grid(), dir_ / "configs" / "small.json");
  const fs::path log = dir_ / "serve.log";
  const pid_t pid = ::fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    const int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    ::dup2(fd, STDOUT_FILENO);
    ::dup2(fd, STDERR_FILENO);
    const std::string config_dir = (dir_ / "configs").string();
    ::execl(ARENA_CLI, ARENA_CLI, "serve", "--bind", "127.0.0.1:0", "--config-dir", config_dir.c_str(), "--roster",
            "spe,bi", "--seed", "3", static_cast<char*>(nullptr));
    ::_exit(127);
  }
  int port = 0;
  for (int i = 0; i < 100 && port == 0; ++i) {
    std::smatch m;
    const std::string text = slurp(log);
    if (std::regex_search(text, m, std::regex(R"(listening on 127\.0\.0\.1:(\d+))"))) port = std::stoi(m[1]);
    else ::usleep(50'000);
  }
  ASSERT_GT(port, 0) << slurp(log);

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  auto configs = client.Get("/configs");
  ASSERT_TRUE(configs);
  const json list = json::parse(configs->body);
  ASSERT_EQ(list.size(), 17u);
  auto created = client.Post("/sessions",
                             json{{"config_id", list[0]["config_id"]}, {"role", "bob"}, {"name", "Lee"}}.dump(),
                             "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 200);
  EXPECT_EQ(json::parse(created->body)["opponent"], "spe");

  ::kill(pid, SIGTERM);
  int status = 0;
  ::waitpid(pid, &status, 0);
  EXPECT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
}

}  // namespace
}  // namespace arena
