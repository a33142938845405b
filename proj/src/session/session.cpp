#include "arena/session/session.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "arena/core/observation.hpp"
#include "arena/errors.hpp"
#include "arena/llm/prompts.hpp"
#include "arena/orchestrator/grid.hpp"
#include "arena/util/rng.hpp"
#include "arena/util/text.hpp"

namespace arena {

namespace fs = std::filesystem;

std::string_view to_string(Stage stage) noexcept {
  switch (stage) {
    case Stage::Instructions: return "instructions";
    case Stage::AttentionGate: return "attention_gate";
    case Stage::Playing: return "playing";
    case Stage::FinalQuiz: return "final_quiz";
    case Stage::Done: return "done";
    case Stage::Disqualified: return "disqualified";
  }
  return "?";
}

namespace {

std::string percent_label(double fraction) { return format_percent(fraction) + "%"; }
std::string amount_label(double amount) { return format_amount(amount) + "$"; }

void shuffle_options(Quiz& quiz, std::uint64_t seed) {
  const std::string answer = quiz.options[static_cast<std::size_t>(quiz.correct)];
  Rng rng(seed);
  for (auto i = static_cast<std::int64_t>(quiz.options.size()) - 1; i > 0; --i) {
    std::swap(quiz.options[static_cast<std::size_t>(i)],
              quiz.options[static_cast<std::size_t>(uniform_int(rng, 0, i))]);
  }
  quiz.correct = static_cast<int>(std::find(quiz.options.begin(), quiz.options.end(), answer) - quiz.options.begin());
}

// Opaque token for ids and completion codes; not part of experiment randomness.
std::string random_token(std::size_t length, std::string_view alphabet) {
  static thread_local std::random_device device;
  std::string out;
  for (std::size_t i = 0; i < length; ++i) out += alphabet[device() % alphabet.size()];
  return out;
}

constexpr std::string_view kHex = "0123456789abcdef";
constexpr std::string_view kCodeAlphabet = "ABCDEFGHJKLMNPQRSTUVWXYZ23456789";

std::string attention_line() {
  return fmt::format(
      "To confirm that you have read these instructions carefully, type the code word \"{}\" in the text box "
      "below.",
      kAttentionCode);
}

}  // namespace

Quiz default_quiz(const GameConfig& config, Player role, std::uint64_t seed) {
  Quiz quiz;
  std::vector<std::string> distractors;
  switch (config.family()) {
    case GameFamily::Bargaining: {
      const auto& c = std::get<BargainingConfig>(config.params);
      const double delta = role == Player::Alice ? c.delta_a : c.delta_b;
      const double rate = 1.0 - delta;
      quiz.question = "What was the inflation rate for you in this game (how much less the money was worth for "
                      "you with each passing round)?";
      quiz.options.push_back(percent_label(rate));
      for (double step : {0.05, 0.10, 0.15, -0.05, -0.10, 0.20, 0.25}) {
        const double alt = rate + step;
        if (alt < -1e-12 || alt > 1.0 + 1e-12) continue;
        distractors.push_back(percent_label(std::max(0.0, alt)));
      }
      break;
    }
    case GameFamily::Negotiation: {
      const auto& c = std::get<NegotiationConfig>(config.params);
      const double value = role == Player::Alice ? c.value_alice() : c.value_bob();
      quiz.question = "What was the value of the product for you in this game?";
      quiz.options.push_back(amount_label(value));
      for (double factor : {0.5, 1.5, 2.0, 3.0}) distractors.push_back(amount_label(value * factor));
      break;
    }
    case GameFamily::Persuasion: {
      const auto money = static_cast<double>(config.money());
      quiz.question = "What was the price of the product in this game?";
      quiz.options.push_back(amount_label(money));
      for (double factor : {0.5, 2.0, 5.0, 10.0}) distractors.push_back(amount_label(money * factor));
      break;
    }
  }
  for (const auto& d : distractors) {
    if (quiz.options.size() == 4) break;
    if (std::find(quiz.options.begin(), quiz.options.end(), d) == quiz.options.end()) quiz.options.push_back(d);
  }
  quiz.correct = 0;
  shuffle_options(quiz, seed);
  return quiz;
}

struct SessionManager::Session {
  std::mutex mu;
  std::string id;
  std::string name;
  Player role = Player::Bob;
  GameConfig config;
  AgentSpec opponent;
  Stage stage = Stage::Instructions;
  std::uint64_t seed = 0;
  GameState state;
  std::shared_ptr<Agent> agent;
  bool opponent_lost = false;
  bool degraded = false;
  std::string error;
  std::vector<TimedEvent> events;
  std::optional<bool> attention_passed;
  Quiz quiz;
  std::optional<int> quiz_answer;
  std::string completion_code;
  std::string instructions;
  std::size_t seen_events = 0;  // events already reported to the participant
  std::map<std::string, json> replies;
};

SessionManager::SessionManager(std::vector<GameConfig> catalog, SessionOptions options)
    : options_(std::move(options)) {
  for (auto& c : catalog) {
    if (c.config_id.empty()) c.config_id = config_content_id(c);
    if (!catalog_.count(c.config_id)) catalog_order_.push_back(c.config_id);
    catalog_[c.config_id] = std::move(c);
  }
  if (options_.transcript_dir) fs::create_directories(*options_.transcript_dir);
}

SessionManager::~SessionManager() = default;

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& session_id) {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw UnknownSession(fmt::format("no session '{}'", session_id));
  return it->second;
}

json SessionManager::list_configs() const {
  json out = json::array();
  for (const auto& id : catalog_order_) {
    out.push_back({{"config_id", id}, {"family", std::string(to_string(catalog_.at(id).family()))}});
  }
  return out;
}

namespace {

Transcript session_transcript(const std::string& id, const GameConfig& config, std::uint64_t seed, Player role,
                              const AgentSpec& opponent, const GameState& state,
                              const std::vector<TimedEvent>& events, bool degraded, bool disqualified,
                              const std::string& error) {
  Transcript t;
  t.game_id = id;
  t.config = config;
  t.seed = seed;
  t.source = "human";
  t.alice_agent = role == Player::Alice ? "human" : opponent.to_string();
  t.bob_agent = role == Player::Bob ? "human" : opponent.to_string();
  t.qualities = state.qualities;
  t.events = events;
  if (state.terminal) {
    t.outcome = state.terminal;
    t.metrics = compute_metrics(*state.terminal, config);
  }
  t.status = degraded ? GameStatus::Degraded : GameStatus::Done;
  t.excluded = degraded || disqualified;
  t.error = disqualified ? "disqualified: " + error : error;
  return t;
}

}  // namespace

json SessionManager::create_session(const CreateRequest& request) {
  std::lock_guard lock(mu_);
  if (request.request_id) {
    if (const auto it = create_cache_.find(*request.request_id); it != create_cache_.end()) return it->second;
  }
  const auto it = catalog_.find(request.config_id);
  if (it == catalog_.end()) throw UnknownConfig(fmt::format("no configuration '{}'", request.config_id));
  const GameConfig& config = it->second;
  const Player opp_role = opponent_of(request.role);

  if (config.family() == GameFamily::Persuasion && request.role == Player::Bob &&
      std::get<PersuasionConfig>(config.params).buyer_mode == BuyerMode::Myopic) {
    throw UnsupportedRole("a human cannot play the myopic buyer: each such buyer plays a single round");
  }
  if (config.family() == GameFamily::Bargaining && !config.horizon().infinite && config.horizon().rounds == 1) {
    throw UnsupportedRole("single-round bargaining is not offered to human participants");
  }

  AgentSpec opponent;
  if (request.opponent) {
    opponent = *request.opponent;
    if (opponent.kind == AgentKind::Human) throw InvalidAgentSpec("the opponent must be an agent, not a human");
    if (!options_.roster.empty() &&
        std::find(options_.roster.begin(), options_.roster.end(), opponent) == options_.roster.end()) {
      throw InvalidAgentSpec(fmt::format("opponent '{}' is not in the service roster", opponent.to_string()));
    }
    check_compatible(opponent, config.family(), opp_role);
  } else {
    bool found = false;
    for (const auto& spec : options_.roster) {
      try {
        check_compatible(spec, config.family(), opp_role);
      } catch (const UnsupportedFamily&) {
        continue;
      }
      opponent = spec;
      found = true;
      break;
    }
    if (!found) throw InvalidAgentSpec("no opponent given and none in the roster fits this configuration");
  }

  auto s = std::make_shared<Session>();
  s->id = random_token(24, kHex);
  s->name = trim(request.name).empty() ? std::string(display_name(request.role)) : std::string(trim(request.name));
  s->role = request.role;
  s->config = config;
  s->opponent = opponent;
  s->seed = combine_seeds({options_.seed, created_++});
  s->state = new_game(config, s->seed);
  s->agent = std::shared_ptr<Agent>(
      options_.factory(opponent, config, opp_role, combine_seeds({s->seed, 2}), s->id).release());
  s->quiz = options_.quiz(config, request.role, combine_seeds({s->seed, 3}));
  s->instructions = build_system_prompt(observe(s->state, s->role), s->name, false) + "\n\n" + attention_line();
  sessions_[s->id] = s;

  json reply{{"session_id", s->id},
             {"stage", std::string(to_string(s->stage))},
             {"name", s->name},
             {"role", std::string(to_string(s->role))},
             {"family", std::string(to_string(config.family()))},
             {"config_id", config.config_id},
             {"opponent", opponent.to_string()},
             {"instructions", s->instructions}};
  if (request.request_id) create_cache_[*request.request_id] = reply;
  return reply;
}

namespace {

// Runs one opponent move under the timeout. Returns nullopt when the agent
// failed or timed out.
std::optional<Action> timed_act(const std::shared_ptr<Agent>& agent, const Observation& obs,
                                std::chrono::milliseconds timeout, std::string& error) {
  auto promise = std::make_shared<std::promise<Action>>();
  auto future = promise->get_future();
  std::thread([agent, obs, promise] {
    try {
      promise->set_value(agent->act(obs));
    } catch (...) {
      promise->set_exception(std::current_exception());
    }
  }).detach();
  if (future.wait_for(timeout) != std::future_status::ready) {
    error = fmt::format("OpponentFailure: no move within {} ms", timeout.count());
    return std::nullopt;
  }
  try {
    return future.get();
  } catch (const ArenaError& e) {
    error = fmt::format("OpponentFailure: {}: {}", e.kind(), e.what());
  } catch (const std::exception& e) {
    error = fmt::format("OpponentFailure: {}", e.what());
  }
  return std::nullopt;
}

}  // namespace

// Helpers that need the private Session type.
namespace session_detail {

template <typename S>
void record(S& s, const Action& action) {
  GameState next = apply_action(s.state, action);
  s.events.push_back(TimedEvent{next.history.back(), utc_timestamp()});
  s.state = std::move(next);
}

template <typename S>
void drive_opponent(S& s, std::chrono::milliseconds timeout) {
  while (!s.state.is_terminal() && s.state.turn != s.role) {
    const Observation obs = observe(s.state, s.state.turn);
    std::optional<Action> action;
    if (!s.opponent_lost) {
      std::string error;
      action = timed_act(s.agent, obs, timeout, error);
      if (!action) {
        s.opponent_lost = true;
        s.degraded = true;
        s.error = error;
      }
    }
    if (!action) action = safe_default_action(obs);
    try {
      record(s, *action);
    } catch (const IllegalAction&) {
      s.degraded = true;
      record(s, safe_default_action(obs));
    } catch (const MessageNotAllowed&) {
      s.degraded = true;
      record(s, safe_default_action(obs));
    }
  }
  if (s.agent && s.agent->degraded()) s.degraded = true;
}

template <typename S>
json view(S& s) {
  const Observation obs = observe(s.state, s.role);
  json j{{"session_id", s.id},
         {"stage", std::string(to_string(s.stage))},
         {"name", s.name},
         {"role", std::string(to_string(s.role))},
         {"round", s.state.round},
         {"terminal", s.state.is_terminal()},
         {"your_turn", obs.my_turn()},
         {"waiting", !obs.my_turn() && !s.state.is_terminal()},
         {"degraded", s.degraded},
         {"observation", to_json(obs)}};
  if (obs.my_turn()) j["prompt"] = build_turn_prompt(obs, s.name, false);
  json moves = json::array();
  for (std::size_t i = s.seen_events; i < s.events.size(); ++i) {
    const auto& e = s.events[i].event;
    if (e.actor == s.role) continue;
    // Only what the participant is entitled to see of the opponent's move.
    moves.push_back({{"round", e.round}, {"action", to_json(e.action)}});
  }
  j["opponent_moves"] = std::move(moves);
  if (s.state.terminal) j["outcome"] = to_json(*s.state.terminal);
  if (s.stage == Stage::FinalQuiz) j["quiz"] = json{{"question", s.quiz.question}, {"options", s.quiz.options}};
  return j;
}

}  // namespace session_detail

namespace {

void persist(const std::optional<fs::path>& dir, const Transcript& t) {
  if (!dir) return;
  write_file_atomic(*dir / (t.game_id + ".jsonl"), to_jsonl(t));
}

}  // namespace

json SessionManager::submit_attention(const std::string& session_id, const std::string& code,
                                      const std::optional<std::string>& request_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  if (request_id) {
    if (const auto it = s->replies.find(*request_id); it != s->replies.end()) return it->second;
  }
  if (s->stage != Stage::Instructions && s->stage != Stage::AttentionGate) {
    throw WrongStage(fmt::format("attention check is closed (stage {})", to_string(s->stage)));
  }
  const bool passed = code == kAttentionCode;
  s->attention_passed = passed;
  json reply{{"session_id", s->id}, {"passed", passed}};
  if (passed) {
    s->stage = Stage::Playing;
    session_detail::drive_opponent(*s, options_.opponent_timeout);
    if (s->state.is_terminal()) s->stage = Stage::FinalQuiz;
    reply["state"] = session_detail::view(*s);
    s->seen_events = s->events.size();
  } else {
    s->stage = Stage::Disqualified;
  }
  reply["stage"] = std::string(to_string(s->stage));
  if (request_id) s->replies[*request_id] = reply;
  return reply;
}

json SessionManager::get_state(const std::string& session_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  if (s->stage != Stage::Playing) {
    throw WrongStage(fmt::format("state is available while playing (stage {})", to_string(s->stage)));
  }
  // Re-fetching the state does not consume unseen opponent moves.
  return session_detail::view(*s);
}

json SessionManager::submit_action(const std::string& session_id, const json& action_json,
                                   const std::optional<std::string>& request_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  if (request_id) {
    if (const auto it = s->replies.find(*request_id); it != s->replies.end()) return it->second;
  }
  if (s->stage != Stage::Playing) {
    throw WrongStage(fmt::format("actions are accepted while playing (stage {})", to_string(s->stage)));
  }
  if (s->state.turn != s->role) throw IllegalAction("it is not your turn");
  const Action action = action_from_json(action_json);
  s->seen_events = s->events.size();
  session_detail::record(*s, action);  // throws with the state unchanged
  session_detail::drive_opponent(*s, options_.opponent_timeout);
  if (s->state.is_terminal()) {
    s->stage = Stage::FinalQuiz;
    persist(options_.transcript_dir, session_transcript(s->id, s->config, s->seed, s->role, s->opponent, s->state,
                                                        s->events, s->degraded, false, s->error));
  }
  json reply = session_detail::view(*s);
  s->seen_events = s->events.size();
  if (request_id) s->replies[*request_id] = reply;
  return reply;
}

json SessionManager::submit_quiz(const std::string& session_id, int answer,
                                 const std::optional<std::string>& request_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  if (request_id) {
    if (const auto it = s->replies.find(*request_id); it != s->replies.end()) return it->second;
  }
  if (s->stage != Stage::FinalQuiz) {
    throw WrongStage(fmt::format("the final quiz is not open (stage {})", to_string(s->stage)));
  }
  s->quiz_answer = answer;
  const bool correct = answer == s->quiz.correct;
  json reply{{"session_id", s->id}, {"correct", correct}};
  if (correct) {
    s->stage = Stage::Done;
    s->completion_code = random_token(10, kCodeAlphabet);
    reply["completion_code"] = s->completion_code;
  } else {
    s->stage = Stage::Disqualified;
  }
  persist(options_.transcript_dir, session_transcript(s->id, s->config, s->seed, s->role, s->opponent, s->state,
                                                      s->events, s->degraded, !correct,
                                                      correct ? s->error : "final quiz"));
  reply["stage"] = std::string(to_string(s->stage));
  if (request_id) s->replies[*request_id] = reply;
  return reply;
}

json SessionManager::get_session(const std::string& session_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  json j{{"session_id", s->id},
         {"stage", std::string(to_string(s->stage))},
         {"name", s->name},
         {"role", std::string(to_string(s->role))},
         {"family", std::string(to_string(s->config.family()))},
         {"config_id", s->config.config_id},
         {"opponent", s->opponent.to_string()},
         {"degraded", s->degraded},
         {"excluded", s->degraded || s->stage == Stage::Disqualified}};
  if (s->stage == Stage::Instructions || s->stage == Stage::AttentionGate) j["instructions"] = s->instructions;
  if (s->attention_passed) j["attention_passed"] = *s->attention_passed;
  if (s->stage == Stage::FinalQuiz) j["quiz"] = json{{"question", s->quiz.question}, {"options", s->quiz.options}};
  if (s->stage == Stage::Done) j["completion_code"] = s->completion_code;
  return j;
}

json SessionManager::get_transcript(const std::string& session_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  if (!s->state.is_terminal()) {
    throw WrongStage(fmt::format("the transcript is available once the game is over (stage {})", to_string(s->stage)));
  }
  const auto t = session_transcript(s->id, s->config, s->seed, s->role, s->opponent, s->state, s->events, s->degraded,
                                    s->stage == Stage::Disqualified, s->stage == Stage::Disqualified ? "final quiz" : s->error);
  json lines = json::array();
  const auto text = to_jsonl(t);
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    lines.push_back(json::parse(text.substr(start, end - start)));
    start = end == std::string::npos ? text.size() : end + 1;
  }
  return lines;
}

Stage SessionManager::stage(const std::string& session_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  return s->stage;
}

std::vector<GameConfig> load_config_catalog(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UnknownConfig(fmt::format("config directory {} does not exist", dir.string()));
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<GameConfig> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw GridFormatError(fmt::format("{}: {}", f.string(), e.what()));
    }
    if (j.is_object() && j.contains("family")) {
      auto c = config_from_json(j);
      validate(c);
      if (c.config_id.empty()) c.config_id = config_content_id(c);
      out.push_back(std::move(c));
    } else {
      for (auto& c : expand_grid(grid_from_json(j))) out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace arena
