#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <json.hpp>

#include "arena/event_log.hpp"

namespace arena {

using RoundsDistribution = std::map<std::int64_t, double>;

struct SimulationConfig {
  // Latent Bradley-Terry strengths; also defines the model pool.
  std::map<ModelId, double> model_strengths;
  std::int64_t votes = 1000;
  RoundsDistribution rounds_distribution{{1, 1.0}};
  // A competitive battle takes the larger of the two sides' draws.
  std::map<ModelId, RoundsDistribution> model_rounds;
  double self_play_probability = 0.1;
  std::uint64_t seed = 0;
  // Probability that a competitive battle ends in a draw.
  double noise = 0.0;
  // Probability that a self-play battle ends in a draw, per model.
  std::map<ModelId, double> consistency;
  double default_consistency = 0.5;
  Timestamp start = Timestamp{std::chrono::milliseconds{1'735'689'600'000LL}};

  // Throws ConfigError.
  void validate() const;
};

// Accepts the fields at the top level or under "simulation".
SimulationConfig parse_simulation_config(const nlohmann::json& j);

// One session_created and one vote_cast per vote; seeded-deterministic.
std::vector<BattleEvent> simulate(const SimulationConfig& config);

}  // namespace arena
