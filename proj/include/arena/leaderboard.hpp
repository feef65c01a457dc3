#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "arena/aggregate.hpp"
#include "arena/metrics.hpp"

namespace arena {

struct LeaderboardRow {
  ModelId model_id;
  // Competitive columns are null for models that only played themselves.
  std::optional<double> win_rate;
  std::optional<double> elo;
  std::optional<double> bt_weight;
  std::optional<double> eigenvector_centrality;
  std::optional<double> pagerank;
  std::optional<int> community_id;
  std::optional<double> modularity_q;
  std::optional<double> mcs;
  std::optional<double> cei;
  std::int64_t battles = 0;
  std::int64_t self_play_battles = 0;
  std::optional<int> bt_component;
  std::vector<std::string> flags;

  bool operator==(const LeaderboardRow&) const = default;
};

struct LeaderboardOptions {
  metrics::EloParams elo;
  metrics::BradleyTerryOptions bradley_terry;
  double centrality_tolerance = 1e-10;
  double pagerank_damping = 0.85;
  double pagerank_tolerance = 1e-9;
  int max_iter = 10'000;
  double cei_draw_magnitude = kDefaultDrawMagnitude;
};

// Rows sorted by bt_weight descending (null last), then model_id.
std::vector<LeaderboardRow> build_leaderboard(const BattleAggregate& agg,
                                              const LeaderboardOptions& options = {});
std::vector<LeaderboardRow> build_leaderboard(std::span<const BattleEvent> events,
                                              const LeaderboardOptions& options = {});

void to_json(nlohmann::json& j, const LeaderboardRow& row);
nlohmann::json leaderboard_to_json(std::span<const LeaderboardRow> rows);
std::string format_leaderboard_table(std::span<const LeaderboardRow> rows);

}  // namespace arena
