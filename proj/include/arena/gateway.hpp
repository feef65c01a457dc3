#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "arena/random.hpp"
#include "arena/types.hpp"

namespace arena {

enum class Role { System, User, Assistant };

std::string_view to_string(Role role);

struct ChatMessage {
  Role role = Role::User;
  std::string text;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  std::chrono::milliseconds deadline{60'000};
  std::string model_ref;

  // Throws PreconditionError.
  void validate() const;
};

struct ProviderReply {
  std::string text;
  // Stubs report the latency they pretend to have taken instead of sleeping.
  std::optional<std::chrono::milliseconds> simulated_latency;
};

class ProviderError : public ArenaError {
 public:
  ProviderError(int status, const std::string& what) : ArenaError(what), status_(status) {}
  // HTTP status, or 0 when no response was received.
  int status() const { return status_; }

 private:
  int status_;
};

class Provider {
 public:
  virtual ~Provider() = default;
  // May block. Throws ProviderError.
  virtual ProviderReply call(const ChatRequest& request) = 0;
};

enum class CompletionStatus { Ok, Timeout, ProviderError };

struct Completion {
  CompletionStatus status = CompletionStatus::Ok;
  std::string text;
  std::string error;
  std::chrono::milliseconds latency{0};
  int attempts = 0;
};

// Runs the provider call against the request deadline. A provider error is
// retried once within the remaining time; a timeout never is.
Completion complete(const ChatRequest& request, std::shared_ptr<Provider> provider);

struct StubProfile {
  std::chrono::milliseconds mean_latency{10};
  // Latency is drawn uniformly from mean * [1 - jitter, 1 + jitter].
  double latency_jitter = 0.0;
  double timeout_probability = 0.0;
  double quality = 1.0;
  std::uint64_t seed = 0;
  // Sleep for the drawn latency instead of reporting it.
  bool real_time = false;

  void validate() const;
};

// Deterministic canned replies. The draw for a request depends only on the
// seed, the request text and how many times that text was seen before.
class StubProvider final : public Provider {
 public:
  explicit StubProvider(StubProfile profile);

  ProviderReply call(const ChatRequest& request) override;
  const StubProfile& profile() const { return profile_; }

 private:
  StubProfile profile_;
  std::mutex mutex_;
  std::map<std::uint64_t, std::uint64_t> seen_;
};

struct OpenAICompatibleConfig {
  std::string base_url;  // scheme://host[:port][/prefix]
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env;  // empty: no Authorization header
  double temperature = 0.7;
};

// POSTs {"model", "messages": [{"role", "content"}], "temperature"} and
// reads choices[0].message.content.
class OpenAICompatibleProvider final : public Provider {
 public:
  explicit OpenAICompatibleProvider(OpenAICompatibleConfig config);

  ProviderReply call(const ChatRequest& request) override;

 private:
  OpenAICompatibleConfig config_;
};

class ProviderRegistry {
 public:
  void add(const ModelId& model, std::shared_ptr<Provider> provider);
  // Throws ConfigError for an unknown model.
  std::shared_ptr<Provider> get(const ModelId& model) const;
  bool contains(const ModelId& model) const { return providers_.count(model) > 0; }

 private:
  std::map<ModelId, std::shared_ptr<Provider>> providers_;
};

}  // namespace arena
