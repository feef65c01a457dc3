#include "arena/simulate.hpp"

#include <cmath>

#include <fmt/format.h>

#include "arena/pairing.hpp"
#include "arena/random.hpp"

namespace arena {

using nlohmann::json;

namespace {

void validate_distribution(const RoundsDistribution& d, const std::string& what) {
  if (d.empty()) throw ConfigError(what + " is empty");
  double total = 0.0;
  for (const auto& [rounds, p] : d) {
    if (rounds < 1) throw ConfigError(what + ": round counts must be >= 1");
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(what + ": probabilities must be in [0, 1]");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError(fmt::format("{}: probabilities sum to {}, not 1", what, total));
}

std::int64_t draw_rounds(const RoundsDistribution& d, Rng& rng) {
  const double u = unit_draw(rng);
  double cumulative = 0.0;
  for (const auto& [rounds, p] : d) {
    cumulative += p;
    if (u < cumulative) return rounds;
  }
  return d.rbegin()->first;
}

RoundsDistribution parse_distribution(const json& j) {
  RoundsDistribution d;
  for (const auto& [key, value] : j.items()) {
    std::size_t used = 0;
    std::int64_t rounds = 0;
    try {
      rounds = std::stoll(key, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != key.size()) throw ConfigError("round count keys must be integers: " + key);
    d[rounds] = value.get<double>();
  }
  return d;
}

}  // namespace

void SimulationConfig::validate() const {
  if (model_strengths.empty()) throw ConfigError("simulation needs at least one model");
  for (const auto& [model, w] : model_strengths) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("strength of " + model + " must be positive");
  }
  if (votes < 1) throw ConfigError("simulation votes must be >= 1");
  validate_distribution(rounds_distribution, "rounds_distribution");
  for (const auto& [model, d] : model_rounds) {
    if (!model_strengths.count(model)) throw ConfigError("model_rounds names unknown model " + model);
    validate_distribution(d, "model_rounds." + model);
  }
  if (!(noise >= 0.0 && noise <= 1.0)) throw ConfigError("noise must be in [0, 1]");
  if (!(self_play_probability >= 0.0 && self_play_probability <= 1.0)) {
    throw ConfigError("self_play_probability must be in [0, 1]");
  }
  if (!(default_consistency >= 0.0 && default_consistency <= 1.0)) {
    throw ConfigError("consistency must be in [0, 1]");
  }
  for (const auto& [model, c] : consistency) {
    if (!model_strengths.count(model)) throw ConfigError("consistency names unknown model " + model);
    if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("consistency must be in [0, 1]");
  }
}

SimulationConfig parse_simulation_config(const json& root) {
  const json& j = root.contains("simulation") ? root.at("simulation") : root;
  SimulationConfig c;
  try {
    for (const auto& [model, w] : j.at("model_strengths").items()) c.model_strengths[model] = w.get<double>();
    c.votes = j.value("votes", c.votes);
    if (j.contains("rounds_distribution")) c.rounds_distribution = parse_distribution(j["rounds_distribution"]);
    if (j.contains("model_rounds")) {
      for (const auto& [model, d] : j["model_rounds"].items()) c.model_rounds[model] = parse_distribution(d);
    }
    c.self_play_probability = j.value("self_play_probability", c.self_play_probability);
    c.seed = j.value("seed", c.seed);
    c.noise = j.value("noise", c.noise);
    if (j.contains("consistency")) {
      if (j["consistency"].is_number()) {
        c.default_consistency = j["consistency"].get<double>();
      } else {
        for (const auto& [model, v] : j["consistency"].items()) c.consistency[model] = v.get<double>();
      }
    }
    if (j.contains("start")) c.start = parse_rfc3339(j["start"].get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("simulation config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("simulation config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<BattleEvent> simulate(const SimulationConfig& config) {
  config.validate();
  std::vector<ModelSpec> pool;
  for (const auto& [model, w] : config.model_strengths) {
    ModelSpec spec;
    spec.model_id = model;
    spec.display_name = model;
    spec.endpoint_ref = "stub";
    pool.push_back(spec);
  }
  PairingPolicy policy;
  policy.self_play_probability = config.self_play_probability;
  policy.rng_seed = config.seed;

  auto rounds_for = [&](const ModelId& m) -> const RoundsDistribution& {
    auto it = config.model_rounds.find(m);
    return it == config.model_rounds.end() ? config.rounds_distribution : it->second;
  };
  auto consistency_of = [&](const ModelId& m) {
    auto it = config.consistency.find(m);
    return it == config.consistency.end() ? config.default_consistency : it->second;
  };

  Rng rng(config.seed);
  std::vector<BattleEvent> events;
  events.reserve(static_cast<std::size_t>(config.votes) * 2);
  auto push = [&](EventType type, EventPayload payload) {
    BattleEvent e;
    e.seq = static_cast<std::int64_t>(events.size()) + 1;
    e.type = type;
    e.timestamp = config.start + std::chrono::seconds{e.seq};
    e.payload = std::move(payload);
    events.push_back(std::move(e));
  };

  for (std::int64_t k = 0; k < config.votes; ++k) {
    const auto [a, b] = sample_pair(pool, policy, rng);
    VoteOutcome outcome;
    std::int64_t rounds;
    if (a == b) {
      rounds = draw_rounds(rounds_for(a), rng);
      if (unit_draw(rng) < consistency_of(a)) {
        outcome = unit_draw(rng) < 0.5 ? VoteOutcome::DrawGood : VoteOutcome::DrawBad;
      } else {
        outcome = unit_draw(rng) < 0.5 ? VoteOutcome::WinA : VoteOutcome::WinB;
      }
    } else {
      rounds = std::max(draw_rounds(rounds_for(a), rng), draw_rounds(rounds_for(b), rng));
      if (unit_draw(rng) < config.noise) {
        outcome = unit_draw(rng) < 0.5 ? VoteOutcome::DrawGood : VoteOutcome::DrawBad;
      } else {
        const double wa = config.model_strengths.at(a);
        const double wb = config.model_strengths.at(b);
        outcome = unit_draw(rng) < wa / (wa + wb) ? VoteOutcome::WinA : VoteOutcome::WinB;
      }
    }

    const std::string session_id = fmt::format("sim-{}-{:07}", config.seed, k);
    SessionCreatedPayload created;
    created.session_id = session_id;
    created.user_id = fmt::format("sim-user-{}", k % 97);
    created.model_a = a;
    created.model_b = b;
    created.consent = true;
    push(EventType::SessionCreated, created);

    VotePayload vote;
    vote.session_id = session_id;
    vote.model_a = a;
    vote.model_b = b;
    vote.outcome = outcome;
    vote.round_count = rounds;
    vote.revision = 0;
    push(EventType::VoteCast, vote);
  }
  return events;
}

}  // namespace arena
