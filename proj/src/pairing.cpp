#include "arena/pairing.hpp"

#include <cctype>
#include <future>
#include <random>

#include <fmt/format.h>

namespace arena {

void PairingPolicy::validate() const {
  if (!(self_play_probability >= 0.0 && self_play_probability <= 1.0)) {
    throw ConfigError("self_play_probability must be in [0, 1]");
  }
}

std::pair<ModelId, ModelId> sample_pair(const std::vector<ModelSpec>& pool, const PairingPolicy& policy,
                                        Rng& rng) {
  policy.validate();
  std::vector<const ModelSpec*> enabled;
  for (const auto& m : pool) {
    if (m.enabled) enabled.push_back(&m);
  }
  if (enabled.empty()) throw ConfigError("model pool has no enabled models");
  if (enabled.size() == 1 && policy.self_play_probability < 1.0) {
    throw ConfigError("a single enabled model requires self_play_probability = 1");
  }

  const auto n = enabled.size();
  if (unit_draw(rng) < policy.self_play_probability) {
    const auto& m = enabled[index_draw(rng, n)]->model_id;
    return {m, m};
  }
  const auto i = index_draw(rng, n);
  auto j = index_draw(rng, n - 1);
  if (j >= i) ++j;
  return {enabled[i]->model_id, enabled[j]->model_id};
}

PairSampler::PairSampler(std::vector<ModelSpec> pool, PairingPolicy policy)
    : pool_(std::move(pool)), policy_(policy) {
  policy_.validate();
  rng_.seed(policy_.rng_seed ? *policy_.rng_seed : std::random_device{}());
}

std::pair<ModelId, ModelId> PairSampler::next() {
  std::lock_guard lock(mutex_);
  return sample_pair(pool_, policy_, rng_);
}

std::int64_t default_token_count(std::string_view text) {
  std::int64_t words = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++words;
    }
  }
  return (words * 4 + 2) / 3;
}

std::int64_t round_tokens(const Round& round, std::string_view prompt, const TokenCounter& tokens,
                          std::optional<Side> side) {
  std::int64_t total = tokens(prompt);
  if (side != Side::B && round.response_a) total += tokens(*round.response_a);
  if (side != Side::A && round.response_b) total += tokens(*round.response_b);
  return total;
}

std::vector<Round> trim_context(const std::vector<Round>& transcript,
                                const std::string& consolidated_first_prompt, std::int64_t budget,
                                const TokenCounter& tokens, std::optional<Side> side) {
  if (budget < 1) throw PreconditionError("token budget must be >= 1");
  if (transcript.empty()) return {};

  std::size_t start = transcript.size();
  std::int64_t total = 0;
  while (start > 0) {
    const auto& round = transcript[start - 1];
    const std::string_view prompt =
        start == 1 && !consolidated_first_prompt.empty() ? std::string_view(consolidated_first_prompt)
                                                         : std::string_view(round.user_prompt);
    const auto cost = round_tokens(round, prompt, tokens, side);
    if (total + cost > budget) break;
    total += cost;
    --start;
  }
  if (start == transcript.size()) {
    throw OversizeInputError(fmt::format("input exceeds the {}-token context window; shorten the prompt", budget));
  }
  return {transcript.begin() + static_cast<std::ptrdiff_t>(start), transcript.end()};
}

Orchestrator::Orchestrator(const ProviderRegistry& providers, Clock& clock, OrchestratorOptions options)
    : providers_(providers), clock_(clock), options_(std::move(options)) {
  if (options_.response_cap <= std::chrono::milliseconds{0}) {
    throw ConfigError("response cap must be positive");
  }
  if (!options_.tokens) options_.tokens = default_token_count;
}

Session Orchestrator::open_session(std::string session_id, std::string user_id, const ModelSpec& model_a,
                                   const ModelSpec& model_b) const {
  Session s;
  s.session_id = std::move(session_id);
  s.user_id = std::move(user_id);
  s.model_a = model_a;
  s.model_b = model_b;
  s.created_at = clock_.now();
  return s;
}

ChatRequest Orchestrator::build_request(const Session& session, Side side, const std::string& prompt) const {
  std::vector<Round> candidate = session.transcript;
  Round pending;
  pending.user_prompt = prompt;
  candidate.push_back(std::move(pending));
  const std::string first = session.transcript.empty() ? assemble_prompt(prompt, session.repo_context)
                                                       : session.consolidated_first_prompt;
  const auto kept =
      trim_context(candidate, first, session.model(side).context_window, options_.tokens, side);
  const std::size_t offset = candidate.size() - kept.size();

  ChatRequest request;
  request.deadline = options_.response_cap;
  request.model_ref = session.model(side).endpoint_ref;
  if (!options_.system_prompt.empty()) request.messages.push_back({Role::System, options_.system_prompt});
  for (std::size_t k = 0; k < kept.size(); ++k) {
    request.messages.push_back({Role::User, offset + k == 0 ? first : kept[k].user_prompt});
    if (k + 1 < kept.size() && kept[k].response(side)) {
      request.messages.push_back({Role::Assistant, *kept[k].response(side)});
    }
  }
  return request;
}

const Round& Orchestrator::run_round(Session& session, const std::string& prompt, bool se_relevant) const {
  if (session.is_frozen(Side::A) && session.is_frozen(Side::B)) {
    throw SessionStalledError("both models timed out; cast a vote to finish the session");
  }

  std::array<std::optional<ChatRequest>, 2> requests;
  for (Side side : {Side::A, Side::B}) {
    if (!session.is_frozen(side)) requests[side == Side::A ? 0 : 1] = build_request(session, side, prompt);
  }

  std::array<std::future<Completion>, 2> pending;
  for (Side side : {Side::A, Side::B}) {
    const int k = side == Side::A ? 0 : 1;
    if (!requests[k]) continue;
    pending[k] = std::async(std::launch::async, complete, *requests[k], providers_.get(session.model(side).model_id));
  }

  Round round;
  round.user_prompt = prompt;
  round.se_relevant = se_relevant;
  for (Side side : {Side::A, Side::B}) {
    const int k = side == Side::A ? 0 : 1;
    auto& response = side == Side::A ? round.response_a : round.response_b;
    auto& status = side == Side::A ? round.status_a : round.status_b;
    auto& latency = side == Side::A ? round.latency_a : round.latency_b;
    if (!requests[k]) {
      status = RoundStatus::Timeout;
      continue;
    }
    const Completion result = pending[k].get();
    latency = result.latency;
    switch (result.status) {
      case CompletionStatus::Ok:
        response = result.text;
        status = RoundStatus::Ok;
        break;
      case CompletionStatus::Timeout:
        status = RoundStatus::Timeout;
        session.frozen[k] = true;
        break;
      case CompletionStatus::ProviderError:
        status = RoundStatus::Error;
        break;
    }
  }

  if (session.transcript.empty()) {
    session.consolidated_first_prompt = assemble_prompt(prompt, session.repo_context);
  }
  session.transcript.push_back(std::move(round));
  return session.transcript.back();
}

VotePayload Orchestrator::cast_or_revise_vote(Session& session, VoteOutcome outcome) const {
  if (session.transcript.empty()) throw PrematureVoteError("vote requires at least one completed round");
  const std::int64_t revision = session.vote_revision ? *session.vote_revision + 1 : 0;
  session.vote_revision = revision;
  session.vote_outcome = outcome;

  VotePayload vote;
  vote.session_id = session.session_id;
  vote.model_a = session.model_a.model_id;
  vote.model_b = session.model_b.model_id;
  vote.outcome = outcome;
  vote.round_count = static_cast<std::int64_t>(session.transcript.size());
  vote.revision = revision;
  return vote;
}

RoundCompletedPayload round_payload(const Session& session, std::size_t index) {
  const Round& r = session.transcript.at(index);
  RoundCompletedPayload p;
  p.session_id = session.session_id;
  p.round_index = static_cast<std::int64_t>(index) + 1;
  p.se_relevant = r.se_relevant;
  p.prompt = r.user_prompt;
  p.response_a = r.response_a;
  p.response_b = r.response_b;
  p.status_a = r.status_a;
  p.status_b = r.status_b;
  p.latency_a_ms = r.latency_a.count();
  p.latency_b_ms = r.latency_b.count();
  return p;
}

}  // namespace arena
