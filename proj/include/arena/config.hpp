#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "arena/gateway.hpp"
#include "arena/guardrail.hpp"
#include "arena/metrics.hpp"
#include "arena/pairing.hpp"
#include "arena/repochat.hpp"

namespace arena {

struct ProviderSpec {
  std::string type = "stub";  // "stub" | "openai"
  StubProfile stub;
  OpenAICompatibleConfig openai;
};

enum class GuardrailMode { Reject, Flag };

struct GuardrailConfig {
  std::string backend = "lexical";  // "lexical" | "external"
  GuardrailMode mode = GuardrailMode::Reject;
  std::optional<std::filesystem::path> keywords_file;
  int threshold = 1;
  ModelId external_model;
  std::chrono::milliseconds external_deadline{10'000};
};

struct ArenaConfig {
  std::vector<ModelSpec> models;
  std::map<ModelId, ProviderSpec> providers;
  metrics::EloParams elo;
  PairingPolicy pairing;
  GuardrailConfig guardrail;
  ForgeConfig forge;
  std::string auth_token;
  std::chrono::milliseconds response_cap{60'000};
  double cei_draw_magnitude = kDefaultDrawMagnitude;
  std::size_t repo_context_budget = 6000;
  std::string system_prompt;

  void validate() const;
};

// Relative keyword paths resolve against `base_dir`. The bearer token comes
// from "auth_token" or else the variable named by "auth_token_env"
// (default ARENA_TOKEN). Throws ConfigError.
ArenaConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ArenaConfig load_config(const std::filesystem::path& path);

ProviderRegistry build_registry(const ArenaConfig& config);
std::unique_ptr<RelevanceClassifier> build_guardrail(const ArenaConfig& config,
                                                     const ProviderRegistry& registry);

}  // namespace arena
