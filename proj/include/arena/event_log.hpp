#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "arena/types.hpp"

namespace arena {

enum class EventType { SessionCreated, RoundCompleted, VoteCast, VoteRevised };

std::string_view to_string(EventType type);

struct SessionCreatedPayload {
  std::string session_id;
  std::string user_id;
  ModelId model_a;
  ModelId model_b;
  std::optional<std::string> repo_url;
  bool context_attached = false;
  bool consent = true;

  bool operator==(const SessionCreatedPayload&) const = default;
};

struct RoundCompletedPayload {
  std::string session_id;
  std::int64_t round_index = 1;  // 1-based
  bool se_relevant = true;
  std::string prompt;
  std::optional<std::string> response_a;
  std::optional<std::string> response_b;
  RoundStatus status_a = RoundStatus::Ok;
  RoundStatus status_b = RoundStatus::Ok;
  std::int64_t latency_a_ms = 0;
  std::int64_t latency_b_ms = 0;

  bool operator==(const RoundCompletedPayload&) const = default;
};

struct VotePayload {
  std::string session_id;
  ModelId model_a;
  ModelId model_b;
  VoteOutcome outcome = VoteOutcome::DrawGood;
  std::int64_t round_count = 1;
  std::int64_t revision = 0;

  bool operator==(const VotePayload&) const = default;
};

using EventPayload = std::variant<SessionCreatedPayload, RoundCompletedPayload, VotePayload>;

struct BattleEvent {
  std::int64_t seq = 0;
  EventType type = EventType::SessionCreated;
  Timestamp timestamp{};
  EventPayload payload;

  const std::string& session_id() const;
  bool operator==(const BattleEvent&) const = default;
};

// One JSON object, no trailing newline. Keys are emitted in sorted order so
// identical events serialize byte-identically.
std::string serialize_event(const BattleEvent& event);

// Throws ParseError naming the seq when it can be recovered from the line.
BattleEvent parse_event(std::string_view line);

// Reads a JSON Lines stream; blank lines are skipped.
std::vector<BattleEvent> read_events(std::istream& in);
std::vector<BattleEvent> read_event_file(const std::filesystem::path& path);

void write_events(std::ostream& out, const std::vector<BattleEvent>& events);

// Append-only JSONL writer. append() is serialized; each line is flushed
// before returning.
class EventLogWriter {
 public:
  explicit EventLogWriter(const std::filesystem::path& path);

  void append(const BattleEvent& event);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mutex_;
};

}  // namespace arena
