#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "arena/time.hpp"

namespace arena {

class ArenaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public ArenaError {
 public:
  using ArenaError::ArenaError;
};

class PreconditionError : public ArenaError {
 public:
  using ArenaError::ArenaError;
};

class IntegrityError : public ArenaError {
 public:
  using ArenaError::ArenaError;
};

class ParseError : public ArenaError {
 public:
  ParseError(std::optional<std::int64_t> seq, const std::string& what);
  std::optional<std::int64_t> seq() const { return seq_; }

 private:
  std::optional<std::int64_t> seq_;
};

using ModelId = std::string;

struct ModelSpec {
  ModelId model_id;
  std::string display_name;
  // Provider descriptor; interpreted by the gateway ("stub", "openai", ...).
  std::string endpoint_ref;
  std::int64_t context_window = 8192;
  bool enabled = true;
};

enum class Side { A, B };

enum class VoteOutcome { WinA, WinB, DrawGood, DrawBad };

enum class RoundStatus { Ok, Timeout, Error };

inline constexpr double kDefaultDrawMagnitude = 0.3;

std::string_view to_string(VoteOutcome outcome);
VoteOutcome parse_vote_outcome(std::string_view text);
std::string_view to_string(Side side);
std::string_view to_string(RoundStatus status);
RoundStatus parse_round_status(std::string_view text);

inline bool is_draw(VoteOutcome outcome) {
  return outcome == VoteOutcome::DrawGood || outcome == VoteOutcome::DrawBad;
}

// Per-vote outcome score for one side: +1 win, -1 loss, +m / -m for the
// good / bad draw.
double outcome_score(VoteOutcome outcome, Side side,
                     double draw_magnitude = kDefaultDrawMagnitude);

// Binary-outcome score used by Elo and win rate: 1, 0.5 or 0.
double binary_score(VoteOutcome outcome, Side side);

struct VoteRecord {
  std::string session_id;
  ModelId model_a;
  ModelId model_b;
  VoteOutcome outcome = VoteOutcome::DrawGood;
  std::int64_t round_count = 1;
  Timestamp timestamp{};
  std::int64_t revision = 0;
  // Sequence number of the log event that placed this vote chronologically.
  std::int64_t seq = 0;

  bool is_self_play() const { return model_a == model_b; }
  bool operator==(const VoteRecord&) const = default;
};

}  // namespace arena
