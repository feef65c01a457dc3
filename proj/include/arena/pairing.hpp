#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "arena/event_log.hpp"
#include "arena/gateway.hpp"
#include "arena/random.hpp"
#include "arena/repochat.hpp"
#include "arena/time.hpp"
#include "arena/types.hpp"

namespace arena {

class OversizeInputError : public ArenaError {
 public:
  using ArenaError::ArenaError;
};

class SessionStalledError : public ArenaError {
 public:
  using ArenaError::ArenaError;
};

class PrematureVoteError : public ArenaError {
 public:
  using ArenaError::ArenaError;
};

struct PairingPolicy {
  double self_play_probability = 0.1;
  std::optional<std::uint64_t> rng_seed;

  void validate() const;
};

// Throws ConfigError when the enabled pool cannot satisfy the policy.
std::pair<ModelId, ModelId> sample_pair(const std::vector<ModelSpec>& pool, const PairingPolicy& policy,
                                        Rng& rng);

// Thread-safe wrapper owning the generator.
class PairSampler {
 public:
  PairSampler(std::vector<ModelSpec> pool, PairingPolicy policy);

  std::pair<ModelId, ModelId> next();

 private:
  std::vector<ModelSpec> pool_;
  PairingPolicy policy_;
  std::mutex mutex_;
  Rng rng_;
};

using TokenCounter = std::function<std::int64_t(std::string_view)>;

// ceil(whitespace-delimited words * 4 / 3)
std::int64_t default_token_count(std::string_view text);

struct Round {
  std::string user_prompt;
  std::optional<std::string> response_a;
  std::optional<std::string> response_b;
  std::chrono::milliseconds latency_a{0};
  std::chrono::milliseconds latency_b{0};
  RoundStatus status_a = RoundStatus::Ok;
  RoundStatus status_b = RoundStatus::Ok;
  bool se_relevant = true;

  const std::optional<std::string>& response(Side side) const { return side == Side::A ? response_a : response_b; }
  bool operator==(const Round&) const = default;
};

// Tokens of one round as dispatched: the prompt plus the given side's reply,
// or both replies when no side is given.
std::int64_t round_tokens(const Round& round, std::string_view prompt, const TokenCounter& tokens,
                          std::optional<Side> side);

// Drops whole rounds from the front until the rest fits `budget`. When the
// transcript starts at the session's first round, pass the consolidated
// first prompt so that it is what gets counted; an empty string keeps the
// round's own prompt. Throws OversizeInputError when the newest round alone
// does not fit.
std::vector<Round> trim_context(const std::vector<Round>& transcript,
                                const std::string& consolidated_first_prompt, std::int64_t budget,
                                const TokenCounter& tokens = default_token_count,
                                std::optional<Side> side = std::nullopt);

struct Session {
  std::string session_id;
  std::string user_id;
  ModelSpec model_a;
  ModelSpec model_b;
  std::vector<Round> transcript;
  std::optional<std::string> repo_url;
  std::optional<RepoContext> repo_context;
  // The round-1 prompt with repository context, once round 1 has run.
  std::string consolidated_first_prompt;
  std::array<bool, 2> frozen{false, false};
  std::optional<std::int64_t> vote_revision;
  std::optional<VoteOutcome> vote_outcome;
  Timestamp created_at{};

  bool is_frozen(Side side) const { return frozen[side == Side::A ? 0 : 1]; }
  const ModelSpec& model(Side side) const { return side == Side::A ? model_a : model_b; }
};

struct OrchestratorOptions {
  std::chrono::milliseconds response_cap{60'000};
  TokenCounter tokens = default_token_count;
  std::string system_prompt;
};

class Orchestrator {
 public:
  Orchestrator(const ProviderRegistry& providers, Clock& clock, OrchestratorOptions options = {});

  Session open_session(std::string session_id, std::string user_id, const ModelSpec& model_a,
                       const ModelSpec& model_b) const;

  // Dispatches to the unfrozen sides concurrently and appends the round. A
  // side that times out is frozen; a frozen side is reported as TIMEOUT with
  // no reply. Throws SessionStalledError or OversizeInputError, leaving the
  // session unchanged.
  const Round& run_round(Session& session, const std::string& prompt, bool se_relevant = true) const;

  // Revision 0 on the first call, then +1 per call.
  VotePayload cast_or_revise_vote(Session& session, VoteOutcome outcome) const;

  // The messages a side would receive for `prompt` as the next round.
  ChatRequest build_request(const Session& session, Side side, const std::string& prompt) const;

  const OrchestratorOptions& options() const { return options_; }

 private:
  const ProviderRegistry& providers_;
  Clock& clock_;
  OrchestratorOptions options_;
};

RoundCompletedPayload round_payload(const Session& session, std::size_t index);

}  // namespace arena
