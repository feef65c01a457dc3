#include "arena/leaderboard.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace arena {

std::vector<LeaderboardRow> build_leaderboard(const BattleAggregate& agg,
                                              const LeaderboardOptions& options) {
  using namespace metrics;

  const BattleAggregate competitive = agg.competitive_subset();
  const auto elo = compute_elo(competitive.competitive_votes(), options.elo);
  const auto bt = fit_bradley_terry(competitive, options.bradley_terry);
  const auto centrality =
      compute_eigenvector_centrality(competitive, options.centrality_tolerance, options.max_iter);
  const auto pagerank = compute_pagerank(competitive, options.pagerank_damping,
                                         options.pagerank_tolerance, options.max_iter);
  const auto communities = detect_communities(competitive);

  std::vector<int> component_sizes(static_cast<std::size_t>(bt.component_count), 0);
  for (int c : bt.component) ++component_sizes[static_cast<std::size_t>(c)];

  std::vector<LeaderboardRow> rows;
  rows.reserve(agg.size());
  for (std::size_t i = 0; i < agg.size(); ++i) {
    LeaderboardRow row;
    row.model_id = agg.models()[i];
    row.self_play_battles = agg.self_play_total(i);
    row.mcs = compute_mcs(agg.self_play_draws(i), agg.self_play_total(i));

    if (const auto k = competitive.index_of(row.model_id)) {
      const std::size_t c = *k;
      row.battles = competitive.competitive_battles(c);
      row.win_rate = compute_win_rate(competitive, row.model_id);
      row.elo = elo.at(row.model_id);
      row.bt_weight = bt.weights[c];
      row.bt_component = bt.component[c];
      row.eigenvector_centrality = centrality.scores[c];
      row.pagerank = pagerank.scores[c];
      row.community_id = communities.community[c];
      row.modularity_q = communities.modularity;
      row.cei = compute_cei(competitive.side_votes(c), options.cei_draw_magnitude);

      if (bt.regularized[c]) row.flags.emplace_back("bt_regularized");
      if (!bt.converged) row.flags.emplace_back("bt_not_converged");
      if (bt.component_count > 1) row.flags.emplace_back("bt_incomparable");
      if (centrality.degenerate) row.flags.emplace_back("eigenvector_degenerate");
      if (!centrality.converged) row.flags.emplace_back("eigenvector_not_converged");
      if (!pagerank.converged) row.flags.emplace_back("pagerank_not_converged");
    }
    rows.push_back(std::move(row));
  }

  std::stable_sort(rows.begin(), rows.end(), [](const LeaderboardRow& l, const LeaderboardRow& r) {
    if (l.bt_weight.has_value() != r.bt_weight.has_value()) return l.bt_weight.has_value();
    if (l.bt_weight && *l.bt_weight != *r.bt_weight) return *l.bt_weight > *r.bt_weight;
    return l.model_id < r.model_id;
  });
  return rows;
}

std::vector<LeaderboardRow> build_leaderboard(std::span<const BattleEvent> events,
                                              const LeaderboardOptions& options) {
  return build_leaderboard(replay_log(events), options);
}

namespace {

template <typename T>
nlohmann::json nullable(const std::optional<T>& value) {
  return value ? nlohmann::json(*value) : nlohmann::json(nullptr);
}

std::string cell(const std::optional<double>& value, int precision) {
  return value ? fmt::format("{:.{}f}", *value, precision) : std::string("-");
}

}  // namespace

void to_json(nlohmann::json& j, const LeaderboardRow& row) {
  j = nlohmann::json{{"model_id", row.model_id},
                     {"win_rate", nullable(row.win_rate)},
                     {"elo", nullable(row.elo)},
                     {"bt_weight", nullable(row.bt_weight)},
                     {"eigenvector_centrality", nullable(row.eigenvector_centrality)},
                     {"pagerank", nullable(row.pagerank)},
                     {"community_id", nullable(row.community_id)},
                     {"modularity_q", nullable(row.modularity_q)},
                     {"mcs", nullable(row.mcs)},
                     {"cei", nullable(row.cei)},
                     {"battles", row.battles},
                     {"self_play_battles", row.self_play_battles},
                     {"bt_component", nullable(row.bt_component)},
                     {"flags", row.flags}};
}

nlohmann::json leaderboard_to_json(std::span<const LeaderboardRow> rows) {
  nlohmann::json array = nlohmann::json::array();
  for (const auto& row : rows) array.push_back(row);
  return array;
}

std::string format_leaderboard_table(std::span<const LeaderboardRow> rows) {
  std::string out = fmt::format("{:<4} {:<24} {:>8} {:>8} {:>9} {:>8} {:>8} {:>4} {:>7} {:>7} {:>7} {:>7}\n",
                                "#", "model", "win_rate", "elo", "bt_weight", "eigen", "pagerank",
                                "comm", "Q", "mcs", "cei", "battles");
  int rank = 1;
  for (const auto& row : rows) {
    out += fmt::format("{:<4} {:<24} {:>8} {:>8} {:>9} {:>8} {:>8} {:>4} {:>7} {:>7} {:>7} {:>7}\n",
                       rank++, row.model_id, cell(row.win_rate, 4), cell(row.elo, 1),
                       cell(row.bt_weight, 4), cell(row.eigenvector_centrality, 4),
                       cell(row.pagerank, 4),
                       row.community_id ? std::to_string(*row.community_id) : std::string("-"),
                       cell(row.modularity_q, 4), cell(row.mcs, 1), cell(row.cei, 4), row.battles);
  }
  return out;
}

}  // namespace arena
