#include "arena/gateway.hpp"

#include <array>
#include <cmath>
#include <cstdlib>
#include <future>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "http_util.hpp"

namespace arena {

using std::chrono::milliseconds;
using std::chrono::steady_clock;

std::string_view to_string(Role role) {
  switch (role) {
    case Role::System:
      return "system";
    case Role::User:
      return "user";
    case Role::Assistant:
      return "assistant";
  }
  return "user";
}

void ChatRequest::validate() const {
  if (messages.empty() || messages.back().role != Role::User) {
    throw PreconditionError("chat request must end with a user message");
  }
  if (deadline <= milliseconds{0}) throw PreconditionError("chat request deadline must be positive");
}

namespace {

std::future<ProviderReply> launch(std::shared_ptr<Provider> provider, ChatRequest request) {
  auto promise = std::make_shared<std::promise<ProviderReply>>();
  auto future = promise->get_future();
  // Detached so that a hung provider cannot hold the caller past its deadline.
  std::thread([provider = std::move(provider), request = std::move(request), promise] {
    try {
      promise->set_value(provider->call(request));
    } catch (...) {
      promise->set_exception(std::current_exception());
    }
  }).detach();
  return future;
}

}  // namespace

Completion complete(const ChatRequest& request, std::shared_ptr<Provider> provider) {
  request.validate();
  const auto start = steady_clock::now();
  const auto deadline_at = start + request.deadline;
  milliseconds simulated{0};
  Completion result;

  auto elapsed = [&] {
    return std::chrono::duration_cast<milliseconds>(steady_clock::now() - start) + simulated;
  };

  for (int attempt = 1; attempt <= 2; ++attempt) {
    result.attempts = attempt;
    const auto remaining =
        std::chrono::duration_cast<milliseconds>(deadline_at - steady_clock::now()) - simulated;
    if (remaining <= milliseconds{0}) {
      result.status = CompletionStatus::Timeout;
      result.latency = elapsed();
      return result;
    }
    ChatRequest attempt_request = request;
    attempt_request.deadline = remaining;
    auto future = launch(provider, std::move(attempt_request));
    if (future.wait_for(remaining) == std::future_status::timeout) {
      result.status = CompletionStatus::Timeout;
      result.latency = elapsed();
      return result;
    }

    try {
      ProviderReply reply = future.get();
      if (reply.simulated_latency) simulated += *reply.simulated_latency;
      result.latency = elapsed();
      if (result.latency > request.deadline) {
        result.status = CompletionStatus::Timeout;
        return result;
      }
      result.status = CompletionStatus::Ok;
      result.text = std::move(reply.text);
      return result;
    } catch (const ProviderError& e) {
      result.error = e.status() ? fmt::format("status {}: {}", e.status(), e.what()) : e.what();
    } catch (const std::exception& e) {
      result.error = e.what();
    }
  }
  result.status = CompletionStatus::ProviderError;
  result.latency = elapsed();
  return result;
}

void StubProfile::validate() const {
  if (mean_latency < milliseconds{0}) throw ConfigError("stub mean_latency must be >= 0");
  if (!(latency_jitter >= 0.0 && latency_jitter <= 1.0)) {
    throw ConfigError("stub latency_jitter must be in [0, 1]");
  }
  if (!(timeout_probability >= 0.0 && timeout_probability <= 1.0)) {
    throw ConfigError("stub timeout_probability must be in [0, 1]");
  }
}

StubProvider::StubProvider(StubProfile profile) : profile_(profile) { profile_.validate(); }

namespace {

constexpr std::array kOpenings = {
    "Looking at this,",
    "Short answer:",
    "A likely cause:",
    "From what you describe,",
    "Here is one way to approach it.",
};

constexpr std::array kAdvice = {
    "check that the build picks up the headers you expect.",
    "add a failing unit test that reproduces the problem first.",
    "the stack trace points at an uninitialized value.",
    "bisect the recent commits to find where it regressed.",
    "make the function pure so it is easier to test.",
    "log the request before it leaves the client.",
    "the loop bound is off by one.",
    "pin the dependency version in the lockfile.",
    "split the class so each part has one reason to change.",
    "run the linter; it flags the shadowed variable.",
};

std::string excerpt(const std::string& prompt) {
  std::string out;
  int words = 0;
  bool in_word = false;
  for (char c : prompt) {
    const bool space = c == ' ' || c == '\n' || c == '\t' || c == '\r';
    if (space) {
      if (in_word && ++words == 8) break;
      in_word = false;
      if (!out.empty() && out.back() != ' ') out += ' ';
    } else {
      in_word = true;
      out += c;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

}  // namespace

ProviderReply StubProvider::call(const ChatRequest& request) {
  std::uint64_t key = 0;
  for (const auto& m : request.messages) {
    key = fnv1a(to_string(m.role), key ^ 0x9e3779b97f4a7c15ULL);
    key = fnv1a(m.text, key);
  }
  std::uint64_t occurrence = 0;
  {
    std::lock_guard lock(mutex_);
    occurrence = seen_[key]++;
  }
  Rng rng(profile_.seed ^ key ^ (occurrence * 0xbf58476d1ce4e5b9ULL));

  milliseconds latency;
  if (unit_draw(rng) < profile_.timeout_probability) {
    latency = request.deadline + std::max(profile_.mean_latency, milliseconds{200});
  } else {
    const double factor = 1.0 + profile_.latency_jitter * (2.0 * unit_draw(rng) - 1.0);
    latency = milliseconds{std::llround(static_cast<double>(profile_.mean_latency.count()) * factor)};
  }

  std::string text = kOpenings[index_draw(rng, kOpenings.size())];
  const auto quoted = excerpt(request.messages.back().text);
  if (!quoted.empty()) text += fmt::format(" (re: \"{}\")", quoted);
  const auto sentences = 1 + index_draw(rng, 3);
  for (std::uint64_t i = 0; i < sentences; ++i) {
    text += ' ';
    text += kAdvice[index_draw(rng, kAdvice.size())];
  }

  if (profile_.real_time) {
    std::this_thread::sleep_for(latency);
    return {std::move(text), std::nullopt};
  }
  return {std::move(text), latency};
}

OpenAICompatibleProvider::OpenAICompatibleProvider(OpenAICompatibleConfig config)
    : config_(std::move(config)) {
  detail::split_base_url(config_.base_url);
  if (config_.model.empty()) throw ConfigError("chat-completion provider needs a model name");
}

ProviderReply OpenAICompatibleProvider::call(const ChatRequest& request) {
  const auto [origin, prefix] = detail::split_base_url(config_.base_url);
  httplib::Client client(origin);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(request.deadline);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw ProviderError(0, fmt::format("environment variable {} is not set", config_.api_key_env));
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  nlohmann::json body;
  body["model"] = config_.model;
  body["temperature"] = config_.temperature;
  body["messages"] = nlohmann::json::array();
  for (const auto& m : request.messages) {
    body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.text}});
  }

  auto res = client.Post(prefix + config_.path, headers, body.dump(), "application/json");
  if (!res) throw ProviderError(0, httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw ProviderError(res->status, fmt::format("HTTP {}: {}", res->status, res->body.substr(0, 200)));
  }
  try {
    const auto parsed = nlohmann::json::parse(res->body);
    return {parsed.at("choices").at(0).at("message").at("content").get<std::string>(), std::nullopt};
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(res->status, std::string("malformed completion response: ") + e.what());
  }
}

void ProviderRegistry::add(const ModelId& model, std::shared_ptr<Provider> provider) {
  providers_[model] = std::move(provider);
}

std::shared_ptr<Provider> ProviderRegistry::get(const ModelId& model) const {
  auto it = providers_.find(model);
  if (it == providers_.end()) throw ConfigError("no provider configured for model " + model);
  return it->second;
}

}  // namespace arena
