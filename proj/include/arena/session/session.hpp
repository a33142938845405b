#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "arena/agents/agent.hpp"
#include "arena/core/json.hpp"
#include "arena/core/transcript.hpp"

namespace arena {

enum class Stage { Instructions, AttentionGate, Playing, FinalQuiz, Done, Disqualified };

std::string_view to_string(Stage stage) noexcept;

inline constexpr std::string_view kAttentionCode = "sdkot";

struct Quiz {
  std::string question;
  std::vector<std::string> options;
  int correct = 0;
};

// Family-specific end-of-game question with four options: the inflation
// rate (bargaining), the participant's product value (negotiation) or the
// product price (persuasion). Option order is drawn from `seed`.
Quiz default_quiz(const GameConfig& config, Player role, std::uint64_t seed);

using QuizBuilder = std::function<Quiz(const GameConfig& config, Player role, std::uint64_t seed)>;

struct SessionOptions {
  std::uint64_t seed = 0;
  // Opponent specs a session may request; empty allows any non-human spec.
  std::vector<AgentSpec> roster;
  AgentFactory factory = scripted_agent_factory();
  // Bound on one opponent move; on expiry the opponent forfeits to the
  // family-safe default for the rest of the game and the game is degraded.
  std::chrono::milliseconds opponent_timeout{30'000};
  // Session transcripts are written here when set.
  std::optional<std::filesystem::path> transcript_dir;
  QuizBuilder quiz = default_quiz;
};

struct CreateRequest {
  std::string config_id;
  Player role = Player::Bob;
  std::optional<AgentSpec> opponent;
  std::string name;
  std::optional<std::string> request_id;
};

// Participant sessions over a catalog of configurations. Payloads are JSON
// objects; every mutating call accepts an optional client request id and
// returns the cached response when the id repeats.
class SessionManager {
 public:
  SessionManager(std::vector<GameConfig> catalog, SessionOptions options);
  ~SessionManager();
  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  // Throws UnknownConfig, UnsupportedRole, UnsupportedFamily, InvalidAgentSpec.
  json create_session(const CreateRequest& request);
  // Accepted in Instructions or AttentionGate; throws WrongStage otherwise.
  json submit_attention(const std::string& session_id, const std::string& code,
                        const std::optional<std::string>& request_id = {});
  // Playing only; throws WrongStage.
  json get_state(const std::string& session_id);
  // Throws WrongStage, IllegalAction (state unchanged), MessageNotAllowed.
  json submit_action(const std::string& session_id, const json& action,
                     const std::optional<std::string>& request_id = {});
  // FinalQuiz only; throws WrongStage.
  json submit_quiz(const std::string& session_id, int answer, const std::optional<std::string>& request_id = {});
  // Stage summary (any stage), without configuration parameters.
  json get_session(const std::string& session_id);
  // Full transcript once the game is over (FinalQuiz, Done, Disqualified).
  json get_transcript(const std::string& session_id);

  // Configurations a session may reference: id and family only.
  json list_configs() const;

  Stage stage(const std::string& session_id);

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& session_id);

  std::map<std::string, GameConfig> catalog_;
  std::vector<std::string> catalog_order_;
  SessionOptions options_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::map<std::string, json> create_cache_;
  std::uint64_t created_ = 0;
};

// Loads every *.json under `dir` (recursively): grid files are expanded,
// single GameConfig objects are taken as they are.
std::vector<GameConfig> load_config_catalog(const std::filesystem::path& dir);

}  // namespace arena
