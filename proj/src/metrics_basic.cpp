#include <cmath>
#include <string>
#include <tuple>

#include "arena/metrics.hpp"

namespace arena::metrics {

std::optional<double> compute_win_rate(const BattleAggregate& agg, const ModelId& model) {
  const auto idx = agg.index_of(model);
  if (!idx) return std::nullopt;
  const std::int64_t battles = agg.competitive_battles(*idx);
  if (battles == 0) return std::nullopt;
  const double won =
      static_cast<double>(agg.total_wins(*idx)) + 0.5 * static_cast<double>(agg.total_draws(*idx));
  return won / static_cast<double>(battles);
}

void EloParams::validate() const {
  if (!(k_factor > 0.0)) throw ConfigError("elo k_factor must be > 0");
  if (!(logistic_scale > 0.0)) throw ConfigError("elo logistic_scale must be > 0");
}

std::map<ModelId, double> compute_elo(std::span<const VoteRecord> votes, const EloParams& params) {
  params.validate();
  std::map<ModelId, double> ratings;
  const VoteRecord* previous = nullptr;
  for (const VoteRecord& vote : votes) {
    if (previous && std::tie(vote.timestamp, vote.seq) < std::tie(previous->timestamp, previous->seq)) {
      throw PreconditionError("elo input not sorted by (timestamp, seq) at seq " +
                              std::to_string(vote.seq));
    }
    previous = &vote;
    if (vote.is_self_play()) continue;

    double& ra = ratings.try_emplace(vote.model_a, params.initial_rating).first->second;
    double& rb = ratings.try_emplace(vote.model_b, params.initial_rating).first->second;
    const double expected_a = 1.0 / (1.0 + std::pow(10.0, (rb - ra) / params.logistic_scale));
    const double delta = params.k_factor * (binary_score(vote.outcome, Side::A) - expected_a);
    ra += delta;
    rb -= delta;
  }
  return ratings;
}

std::optional<double> compute_mcs(std::int64_t self_play_draws, std::int64_t self_play_total) {
  if (self_play_draws < 0 || self_play_total < 0) {
    throw IntegrityError("self-play counts must be non-negative");
  }
  if (self_play_draws > self_play_total) {
    throw IntegrityError("self-play draws " + std::to_string(self_play_draws) +
                         " exceed self-play total " + std::to_string(self_play_total));
  }
  if (self_play_total == 0) return std::nullopt;
  return static_cast<double>(self_play_draws) / static_cast<double>(self_play_total) * 100.0;
}

std::optional<double> compute_cei(std::span<const std::pair<double, std::int64_t>> votes) {
  if (votes.empty()) return std::nullopt;
  double weighted = 0.0;
  double weights = 0.0;
  for (const auto& [score, rounds] : votes) {
    if (rounds < 1) {
      throw IntegrityError("round count must be >= 1, got " + std::to_string(rounds));
    }
    const double w = 1.0 / static_cast<double>(rounds);
    weighted += score * w;
    weights += w;
  }
  return weighted / weights;
}

std::optional<double> compute_cei(std::span<const SideVote> votes, double draw_magnitude) {
  std::vector<std::pair<double, std::int64_t>> scored;
  scored.reserve(votes.size());
  for (const auto& v : votes) scored.emplace_back(v.score(draw_magnitude), v.round_count);
  return compute_cei(scored);
}

}  // namespace arena::metrics
