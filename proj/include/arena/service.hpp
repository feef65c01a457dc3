#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "arena/config.hpp"
#include "arena/event_log.hpp"
#include "arena/leaderboard.hpp"
#include "arena/pairing.hpp"

namespace arena {

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

// Transport-free core of the HTTP API. Every method is safe to call
// concurrently; requests for one session are serialized and a second
// concurrent request for it gets 409.
class ArenaService {
 public:
  ArenaService(ArenaConfig config, ProviderRegistry registry, std::unique_ptr<RelevanceClassifier> guardrail,
               Clock& clock, std::optional<std::filesystem::path> log_path = std::nullopt);
  ~ArenaService();

  ApiResponse create_session(const nlohmann::json& body);
  ApiResponse post_message(const std::string& session_id, const nlohmann::json& body);
  // revise=false is POST (first vote), revise=true is PUT.
  ApiResponse vote(const std::string& session_id, const nlohmann::json& body, bool revise);
  ApiResponse leaderboard() const;
  ApiResponse health() const;

  // Pre-vote text shown to users has every pool identity replaced.
  std::string redact(std::string text) const;

  std::vector<BattleEvent> events() const;
  const ArenaConfig& config() const { return config_; }

 private:
  struct Slot;

  std::shared_ptr<Slot> find(const std::string& session_id) const;
  BattleEvent append(EventType type, EventPayload payload);
  void refresh_leaderboard();
  std::string new_session_id();

  ArenaConfig config_;
  ProviderRegistry registry_;
  std::unique_ptr<RelevanceClassifier> guardrail_;
  Clock& clock_;
  Orchestrator orchestrator_;
  PairSampler sampler_;
  ForgeClient forge_;
  LeaderboardOptions leaderboard_options_;
  std::vector<std::string> identities_;

  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::set<std::string> logged_sessions_;
  Rng id_rng_;

  mutable std::mutex log_mutex_;
  std::vector<BattleEvent> events_;
  std::unique_ptr<EventLogWriter> writer_;
  std::shared_ptr<const nlohmann::json> leaderboard_body_;
};

class HttpApi {
 public:
  // Requests other than GET /healthz and GET /leaderboard need
  // "Authorization: Bearer <token>".
  HttpApi(ArenaService& service, std::string token);
  ~HttpApi();

  // Returns the bound port; port 0 picks a free one.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace arena
