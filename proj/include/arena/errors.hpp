#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace arena {

// Base of every error raised by the arena. `kind()` is the stable,
// machine-readable name printed by the CLI and returned by the HTTP service.
class ArenaError : public std::runtime_error {
 public:
  ArenaError(std::string_view kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define ARENA_DEFINE_ERROR(Name)                                  \
  class Name : public ArenaError {                                \
   public:                                                        \
    explicit Name(const std::string& what) : ArenaError(#Name, what) {} \
  }

// game-core
ARENA_DEFINE_ERROR(InvalidConfig);
ARENA_DEFINE_ERROR(GameOver);
ARENA_DEFINE_ERROR(IllegalAction);
ARENA_DEFINE_ERROR(MessageNotAllowed);
ARENA_DEFINE_ERROR(TranscriptError);

// baseline-agents
ARENA_DEFINE_ERROR(DomainError);
ARENA_DEFINE_ERROR(UnsupportedFamily);
ARENA_DEFINE_ERROR(InvalidAgentSpec);

// llm-gateway
ARENA_DEFINE_ERROR(ParseFailure);
ARENA_DEFINE_ERROR(RangeViolation);
ARENA_DEFINE_ERROR(TransportError);
ARENA_DEFINE_ERROR(AuthError);
ARENA_DEFINE_ERROR(ProviderConfigError);

// orchestrator
ARENA_DEFINE_ERROR(EmptyGrid);
ARENA_DEFINE_ERROR(GridFormatError);
ARENA_DEFINE_ERROR(LedgerMismatch);

// analysis
ARENA_DEFINE_ERROR(MixedFamilies);
ARENA_DEFINE_ERROR(UnknownLevel);
ARENA_DEFINE_ERROR(UnknownBlock);
ARENA_DEFINE_ERROR(TooFewGames);

// session-service
ARENA_DEFINE_ERROR(WrongStage);
ARENA_DEFINE_ERROR(UnknownConfig);
ARENA_DEFINE_ERROR(UnknownSession);
ARENA_DEFINE_ERROR(UnsupportedRole);
ARENA_DEFINE_ERROR(OpponentFailure);

#undef ARENA_DEFINE_ERROR

// Raised by fit_ols when the design is not identified. `aliased` lists every
// column that participates in a linear dependency.
class RankDeficient : public ArenaError {
 public:
  RankDeficient(const std::string& what, std::vector<std::string> aliased)
      : ArenaError("RankDeficient", what), aliased_(std::move(aliased)) {}

  const std::vector<std::string>& aliased() const noexcept { return aliased_; }

 private:
  std::vector<std::string> aliased_;
};

}  // namespace arena
