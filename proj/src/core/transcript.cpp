#include "arena/core/transcript.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "arena/core/json.hpp"
#include "arena/errors.hpp"

namespace arena {

std::string_view to_string(GameStatus status) noexcept {
  switch (status) {
    case GameStatus::Done: return "done";
    case GameStatus::Failed: return "failed";
    case GameStatus::Degraded: return "degraded";
  }
  return "?";
}

GameStatus parse_status(std::string_view text) {
  if (text == "done") return GameStatus::Done;
  if (text == "failed") return GameStatus::Failed;
  if (text == "degraded") return GameStatus::Degraded;
  throw TranscriptError(fmt::format("unknown game status '{}'", text));
}

std::string utc_timestamp() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  return fmt::format("{:%Y-%m-%dT%H:%M:%S}.{:03d}Z", fmt::gmtime(system_clock::to_time_t(now)), ms);
}

std::string to_jsonl(const Transcript& t) {
  std::string out;
  json header{{"type", "game"},
              {"game_id", t.game_id},
              {"config", to_json(t.config)},
              {"seed", t.seed},
              {"alice", t.alice_agent},
              {"bob", t.bob_agent},
              {"source", t.source}};
  if (!t.qualities.empty()) {
    json q = json::array();
    for (bool b : t.qualities) q.push_back(b ? 1 : 0);
    header["qualities"] = std::move(q);
  }
  out += header.dump();
  out += '\n';

  for (const auto& te : t.events) {
    json rec{{"type", "event"},
             {"game_id", t.game_id},
             {"round", te.event.round},
             {"actor", std::string(to_string(te.event.actor))},
             {"action", to_json(te.event.action, /*with_message=*/false)}};
    if (const auto& msg = message_of(te.event.action)) rec["message"] = *msg;
    rec["timestamp"] = te.timestamp;
    out += rec.dump();
    out += '\n';
  }

  json tail{{"type", "outcome"}, {"game_id", t.game_id}, {"status", std::string(to_string(t.status))}};
  if (t.outcome) tail["outcome"] = to_json(*t.outcome);
  if (t.metrics) tail["metrics"] = to_json(*t.metrics);
  tail["excluded"] = t.excluded;
  if (!t.error.empty()) tail["error"] = t.error;
  out += tail.dump();
  out += '\n';
  return out;
}

namespace {

Action attach_message(Action action, const json& rec) {
  if (!rec.contains("message")) return action;
  auto text = rec.at("message").get<std::string>();
  std::visit(
      [&](auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, ProposeSplit> || std::is_same_v<T, ProposePrice>) {
          a.message = std::move(text);
        } else if constexpr (std::is_same_v<T, SellerSignal>) {
          a.text = std::move(text);
        } else {
          throw TranscriptError("message attached to an action that cannot carry one");
        }
      },
      action);
  return action;
}

}  // namespace

Transcript parse_transcript(std::string_view text) {
  Transcript t;
  bool have_header = false;
  bool have_tail = false;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (have_tail) throw TranscriptError(fmt::format("line {}: record after outcome", line_no));
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw TranscriptError(fmt::format("line {}: {}", line_no, e.what()));
    }
    try {
      const auto type = rec.at("type").get<std::string>();
      if (type == "game") {
        if (have_header) throw TranscriptError("duplicate game header");
        have_header = true;
        t.game_id = rec.at("game_id").get<std::string>();
        t.config = config_from_json(rec.at("config"));
        t.seed = rec.at("seed").get<std::uint64_t>();
        t.alice_agent = rec.at("alice").get<std::string>();
        t.bob_agent = rec.at("bob").get<std::string>();
        t.source = rec.value("source", std::string("batch"));
        if (rec.contains("qualities")) {
          for (const auto& q : rec.at("qualities")) t.qualities.push_back(q.get<int>() != 0);
        }
      } else if (type == "event") {
        if (!have_header) throw TranscriptError("event before game header");
        TimedEvent te;
        te.event.round = rec.at("round").get<int>();
        te.event.actor = parse_player(rec.at("actor").get<std::string>());
        te.event.action = attach_message(action_from_json(rec.at("action")), rec);
        te.timestamp = rec.value("timestamp", std::string());
        t.events.push_back(std::move(te));
      } else if (type == "outcome") {
        if (!have_header) throw TranscriptError("outcome before game header");
        have_tail = true;
        t.status = parse_status(rec.at("status").get<std::string>());
        if (rec.contains("outcome")) t.outcome = outcome_from_json(t.config.family(), rec.at("outcome"));
        if (rec.contains("metrics")) t.metrics = metrics_from_json(rec.at("metrics"));
        t.excluded = rec.value("excluded", false);
        t.error = rec.value("error", std::string());
      } else {
        throw TranscriptError(fmt::format("unknown record type '{}'", type));
      }
    } catch (const json::exception& e) {
      throw TranscriptError(fmt::format("line {}: {}", line_no, e.what()));
    } catch (const ArenaError& e) {
      if (dynamic_cast<const TranscriptError*>(&e)) throw;
      throw TranscriptError(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  if (!have_header) throw TranscriptError("missing game header");
  if (!have_tail) throw TranscriptError("missing outcome record (truncated transcript)");
  return t;
}

Transcript read_transcript(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TranscriptError(fmt::format("cannot open {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_transcript(buffer.str());
  } catch (const TranscriptError& e) {
    throw TranscriptError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

ReplayResult verify_replay(const Transcript& t) {
  std::vector<Event> events;
  events.reserve(t.events.size());
  for (const auto& te : t.events) events.push_back(te.event);
  ReplayResult r{replay(t.config, t.seed, events), std::nullopt, false};
  if (r.state.terminal) r.metrics = compute_metrics(*r.state.terminal, t.config);
  const bool qualities_match = t.qualities.empty() || t.qualities == r.state.qualities;
  r.matches = qualities_match && r.state.terminal == t.outcome && r.metrics == t.metrics;
  return r;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content,
                       const std::function<void()>& before_rename) {
  const auto tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw TranscriptError(fmt::format("cannot create {}", tmp));
  std::size_t written = 0;
  while (written < content.size()) {
    const auto n = ::write(fd, content.data() + written, content.size() - written);
    if (n < 0) {
      ::close(fd);
      throw TranscriptError(fmt::format("write to {} failed", tmp));
    }
    written += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
  if (before_rename) before_rename();
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw TranscriptError(fmt::format("rename {} -> {}: {}", tmp, path.string(), ec.message()));
}

}  // namespace arena
