#include "arena/service.hpp"

#include <algorithm>
#include <cctype>
#include <random>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

namespace arena {

using nlohmann::json;

struct ArenaService::Slot {
  std::mutex mutex;
  Session session;
};

namespace {

ApiResponse error_response(int status, std::string_view code, std::string_view detail = {}) {
  json body{{"error", code}};
  if (!detail.empty()) body["detail"] = detail;
  return {status, std::move(body)};
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

json identity(const ModelSpec& m) { return {{"model_id", m.model_id}, {"display_name", m.display_name}}; }

const ModelSpec& spec_of(const std::vector<ModelSpec>& pool, const ModelId& id) {
  for (const auto& m : pool) {
    if (m.model_id == id) return m;
  }
  throw ConfigError("sampled unknown model " + id);
}

}  // namespace

ArenaService::ArenaService(ArenaConfig config, ProviderRegistry registry,
                           std::unique_ptr<RelevanceClassifier> guardrail, Clock& clock,
                           std::optional<std::filesystem::path> log_path)
    : config_(std::move(config)),
      registry_(std::move(registry)),
      guardrail_(std::move(guardrail)),
      clock_(clock),
      orchestrator_(registry_, clock_,
                    OrchestratorOptions{config_.response_cap, default_token_count, config_.system_prompt}),
      sampler_(config_.models, config_.pairing),
      forge_(config_.forge) {
  config_.validate();
  for (const auto& m : config_.models) {
    if (!registry_.contains(m.model_id)) throw ConfigError("no provider registered for " + m.model_id);
  }
  leaderboard_options_.elo = config_.elo;
  leaderboard_options_.cei_draw_magnitude = config_.cei_draw_magnitude;

  for (const auto& m : config_.models) {
    for (const auto& name : {m.model_id, m.display_name}) {
      if (name.size() >= 2) identities_.push_back(lower(name));
    }
  }
  std::sort(identities_.begin(), identities_.end(),
            [](const auto& a, const auto& b) { return a.size() != b.size() ? a.size() > b.size() : a < b; });
  identities_.erase(std::unique(identities_.begin(), identities_.end()), identities_.end());

  id_rng_.seed(config_.pairing.rng_seed ? *config_.pairing.rng_seed ^ 0x2545f4914f6cdd1dULL
                                        : std::random_device{}());

  if (log_path) {
    if (std::filesystem::exists(*log_path)) events_ = read_event_file(*log_path);
    for (const auto& e : events_) {
      if (e.type == EventType::SessionCreated) {
        logged_sessions_.insert(std::get<SessionCreatedPayload>(e.payload).session_id);
      }
    }
    writer_ = std::make_unique<EventLogWriter>(*log_path);
  }
  std::lock_guard lock(log_mutex_);
  refresh_leaderboard();
}

ArenaService::~ArenaService() = default;

std::string ArenaService::redact(std::string text) const {
  std::string folded = lower(text);
  for (const auto& name : identities_) {
    std::size_t pos = 0;
    while ((pos = folded.find(name, pos)) != std::string::npos) {
      text.replace(pos, name.size(), "[model]");
      folded.replace(pos, name.size(), "[model]");
      pos += 7;
    }
  }
  return text;
}

std::string ArenaService::new_session_id() {
  std::lock_guard lock(sessions_mutex_);
  for (;;) {
    auto id = fmt::format("s-{:016x}", id_rng_());
    if (!sessions_.count(id) && !logged_sessions_.count(id)) return id;
  }
}

std::shared_ptr<ArenaService::Slot> ArenaService::find(const std::string& session_id) const {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(session_id);
  return it == sessions_.end() ? nullptr : it->second;
}

BattleEvent ArenaService::append(EventType type, EventPayload payload) {
  BattleEvent e;
  e.seq = events_.empty() ? 1 : events_.back().seq + 1;
  e.type = type;
  e.timestamp = clock_.now();
  e.payload = std::move(payload);
  if (writer_) writer_->append(e);
  events_.push_back(e);
  return e;
}

void ArenaService::refresh_leaderboard() {
  const auto rows = build_leaderboard(std::span<const BattleEvent>(events_), leaderboard_options_);
  leaderboard_body_ = std::make_shared<const json>(leaderboard_to_json(rows));
}

ApiResponse ArenaService::create_session(const json& body) {
  if (!body.is_object()) return error_response(400, "invalid-json");
  auto consent = body.find("consent");
  if (consent == body.end() || !consent->is_boolean() || !consent->get<bool>()) {
    return error_response(422, "consent-required", "consent: true is required to create a session");
  }
  auto user = body.find("user_id");
  if (user == body.end() || !user->is_string() || user->get_ref<const std::string&>().empty()) {
    return error_response(422, "user-id-required");
  }
  std::optional<std::string> repo_url;
  if (auto url = body.find("repo_url"); url != body.end() && !url->is_null()) {
    if (!url->is_string()) return error_response(422, "unsupported-url", "repo_url must be a string");
    if (!url->get_ref<const std::string&>().empty()) repo_url = url->get<std::string>();
  }

  const auto [a, b] = sampler_.next();
  Session session = orchestrator_.open_session(new_session_id(), user->get<std::string>(),
                                               spec_of(config_.models, a), spec_of(config_.models, b));
  session.repo_url = repo_url;

  ApiResponse response{201, json::object()};
  if (repo_url) {
    try {
      const auto ref = parse_repo_url(*repo_url);
      auto context = fetch_context(ref, forge_, config_.repo_context_budget);
      if (!context.empty()) session.repo_context = std::move(context);
    } catch (const UnsupportedUrlError& e) {
      response.status = 422;
      response.body["error"] = "unsupported-url";
      response.body["detail"] = e.what();
    } catch (const NotFoundError& e) {
      response.body["context_error"] = "not-found";
      spdlog::info("repo context unavailable: {}", e.what());
    } catch (const AuthError& e) {
      response.body["context_error"] = "auth";
      spdlog::info("repo context unavailable: {}", e.what());
    } catch (const FetchTimeoutError& e) {
      response.body["context_error"] = "timeout";
      spdlog::info("repo context unavailable: {}", e.what());
    } catch (const FetchError& e) {
      response.body["context_error"] = "fetch-failed";
      spdlog::info("repo context unavailable: {}", e.what());
    }
  }

  SessionCreatedPayload created;
  created.session_id = session.session_id;
  created.user_id = session.user_id;
  created.model_a = a;
  created.model_b = b;
  created.repo_url = repo_url;
  created.context_attached = session.repo_context.has_value();
  created.consent = true;

  response.body["session_id"] = session.session_id;
  response.body["context_attached"] = created.context_attached;
  if (session.repo_context) response.body["context_truncated"] = session.repo_context->truncated;
  response.body["frozen_a"] = false;
  response.body["frozen_b"] = false;

  auto slot = std::make_shared<Slot>();
  slot->session = std::move(session);
  {
    std::lock_guard lock(log_mutex_);
    append(EventType::SessionCreated, created);
  }
  {
    std::lock_guard lock(sessions_mutex_);
    sessions_[created.session_id] = std::move(slot);
  }
  return response;
}

ApiResponse ArenaService::post_message(const std::string& session_id, const json& body) {
  auto slot = find(session_id);
  if (!slot) return error_response(404, "unknown-session");
  std::unique_lock session_lock(slot->mutex, std::try_to_lock);
  if (!session_lock) return error_response(409, "request-in-flight", "another request for this session is running");
  Session& session = slot->session;

  if (!body.is_object()) return error_response(400, "invalid-json");
  auto prompt_it = body.find("prompt");
  if (prompt_it == body.end() || !prompt_it->is_string()) return error_response(422, "prompt-required");
  const std::string prompt = prompt_it->get<std::string>();

  RelevanceVerdict verdict;
  try {
    verdict = classify(prompt, *guardrail_);
  } catch (const PreconditionError&) {
    return error_response(422, "prompt-required");
  }
  if (!verdict.relevant && config_.guardrail.mode == GuardrailMode::Reject) {
    ApiResponse r = error_response(422, "non-SE prompt", verdict.reason);
    r.body["confidence"] = verdict.confidence;
    return r;
  }

  try {
    orchestrator_.run_round(session, prompt, verdict.relevant);
  } catch (const SessionStalledError& e) {
    return error_response(409, "session-stalled", e.what());
  } catch (const OversizeInputError& e) {
    return error_response(413, "input-too-large", e.what());
  }

  const auto payload = round_payload(session, session.transcript.size() - 1);
  {
    std::lock_guard lock(log_mutex_);
    append(EventType::RoundCompleted, payload);
  }

  const bool reveal = session.vote_revision.has_value();
  auto reply = [&](const std::optional<std::string>& text) -> json {
    if (!text) return nullptr;
    return reveal ? *text : redact(*text);
  };
  json out{
      {"session_id", session.session_id},
      {"round_index", payload.round_index},
      {"response_a", reply(payload.response_a)},
      {"response_b", reply(payload.response_b)},
      {"status_a", to_string(payload.status_a)},
      {"status_b", to_string(payload.status_b)},
      {"frozen_a", session.frozen[0]},
      {"frozen_b", session.frozen[1]},
      {"se_relevant", payload.se_relevant},
  };
  return {200, std::move(out)};
}

ApiResponse ArenaService::vote(const std::string& session_id, const json& body, bool revise) {
  auto slot = find(session_id);
  if (!slot) return error_response(404, "unknown-session");
  std::unique_lock session_lock(slot->mutex, std::try_to_lock);
  if (!session_lock) return error_response(409, "request-in-flight", "another request for this session is running");
  Session& session = slot->session;

  if (!body.is_object()) return error_response(400, "invalid-json");
  VoteOutcome outcome;
  try {
    outcome = parse_vote_outcome(body.at("outcome").get<std::string>());
  } catch (const std::exception&) {
    return error_response(422, "invalid-outcome", "outcome must be win_a, win_b, draw_good or draw_bad");
  }
  if (!revise && session.vote_revision) return error_response(409, "already-voted", "use PUT to revise");
  if (revise && !session.vote_revision) return error_response(409, "no-vote-to-revise");

  VotePayload vote;
  try {
    vote = orchestrator_.cast_or_revise_vote(session, outcome);
  } catch (const PrematureVoteError& e) {
    return error_response(409, "premature-vote", e.what());
  }
  {
    std::lock_guard lock(log_mutex_);
    append(vote.revision == 0 ? EventType::VoteCast : EventType::VoteRevised, vote);
    refresh_leaderboard();
  }

  json out{
      {"session_id", session.session_id},
      {"revision", vote.revision},
      {"outcome", to_string(vote.outcome)},
      {"round_count", vote.round_count},
      {"model_a", identity(session.model_a)},
      {"model_b", identity(session.model_b)},
  };
  return {200, std::move(out)};
}

ApiResponse ArenaService::leaderboard() const {
  std::lock_guard lock(log_mutex_);
  return {200, *leaderboard_body_};
}

ApiResponse ArenaService::health() const { return {200, json{{"status", "ok"}}}; }

std::vector<BattleEvent> ArenaService::events() const {
  std::lock_guard lock(log_mutex_);
  return events_;
}

struct HttpApi::Impl {
  Impl(ArenaService& s, std::string t) : service(s), token(std::move(t)) {}

  ArenaService& service;
  std::string token;
  httplib::Server server;
};

namespace {

void send(httplib::Response& res, const ApiResponse& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return json::parse(req.body, nullptr, false);
}

}  // namespace

HttpApi::HttpApi(ArenaService& service, std::string token)
    : impl_(std::make_unique<Impl>(service, std::move(token))) {
  if (impl_->token.empty()) throw ConfigError("the HTTP API needs a bearer token");
  auto& svr = impl_->server;
  Impl* impl = impl_.get();

  svr.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Authorization, Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS"}});

  svr.set_pre_routing_handler([impl](const httplib::Request& req, httplib::Response& res) {
    if (req.method == "OPTIONS") {
      res.status = 204;
      return httplib::Server::HandlerResponse::Handled;
    }
    const bool open = req.method == "GET" && (req.path == "/healthz" || req.path == "/leaderboard");
    if (!open && req.get_header_value("Authorization") != "Bearer " + impl->token) {
      send(res, {401, json{{"error", "unauthorized"}}});
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });

  svr.Post("/sessions", [impl](const httplib::Request& req, httplib::Response& res) {
    const auto body = body_of(req);
    send(res, body.is_discarded() ? ApiResponse{400, {{"error", "invalid-json"}}} : impl->service.create_session(body));
  });
  svr.Post(R"(/sessions/([^/]+)/messages)", [impl](const httplib::Request& req, httplib::Response& res) {
    const auto body = body_of(req);
    send(res, body.is_discarded() ? ApiResponse{400, {{"error", "invalid-json"}}}
                                  : impl->service.post_message(req.matches[1], body));
  });
  auto vote = [impl](bool revise) {
    return [impl, revise](const httplib::Request& req, httplib::Response& res) {
      const auto body = body_of(req);
      send(res, body.is_discarded() ? ApiResponse{400, {{"error", "invalid-json"}}}
                                    : impl->service.vote(req.matches[1], body, revise));
    };
  };
  svr.Post(R"(/sessions/([^/]+)/vote)", vote(false));
  svr.Put(R"(/sessions/([^/]+)/vote)", vote(true));
  svr.Get("/leaderboard", [impl](const httplib::Request&, httplib::Response& res) {
    send(res, impl->service.leaderboard());
  });
  svr.Get("/healthz", [impl](const httplib::Request&, httplib::Response& res) {
    send(res, impl->service.health());
  });

  svr.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      res.set_content(json{{"error", res.status == 404 ? "not-found" : "error"}}.dump(), "application/json");
    }
  });
  svr.set_exception_handler([](const httplib::Request& req, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "unknown";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    spdlog::error("{} {} failed: {}", req.method, req.path, what);
    send(res, {500, json{{"error", "internal"}}});
  });
}

HttpApi::~HttpApi() { stop(); }

int HttpApi::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw ArenaError("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) throw ArenaError(fmt::format("cannot bind {}:{}", host, port));
  return port;
}

void HttpApi::serve() { impl_->server.listen_after_bind(); }

void HttpApi::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace arena
