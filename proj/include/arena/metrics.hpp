#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "arena/aggregate.hpp"

namespace arena::metrics {

// (wins + 0.5 * draws) / battles over competitive votes; nullopt without
// battles or for an unknown model.
std::optional<double> compute_win_rate(const BattleAggregate& agg, const ModelId& model);

struct EloParams {
  double initial_rating = 1000.0;
  double k_factor = 32.0;
  double logistic_scale = 400.0;

  void validate() const;
};

// Sequential Elo over votes ordered by (timestamp, seq). Self-play votes
// are skipped. Throws PreconditionError on unsorted input.
std::map<ModelId, double> compute_elo(std::span<const VoteRecord> votes,
                                      const EloParams& params = {});

struct BradleyTerryOptions {
  double tolerance = 1e-8;
  int max_iter = 10'000;
  // Records the log-likelihood of the starting point and after every
  // iteration (used to check MM monotonicity).
  bool record_log_likelihood = false;
};

struct BradleyTerryFit {
  // Indexed like agg.models(); geometric mean 1 within each component.
  std::vector<double> weights;
  // Connected component of the comparison graph, numbered by first member.
  std::vector<int> component;
  // Model received the virtual half-win/half-loss regularization.
  std::vector<bool> regularized;
  int component_count = 0;
  int iterations = 0;
  bool converged = true;
  std::vector<double> log_likelihood_trace;

  double weight_of(const BattleAggregate& agg, const ModelId& model) const;
};

// Hunter's MM iteration w_i <- W_i / sum_j n_ij / (w_i + w_j), fitted per
// connected component. Models without a win (or without a loss) get a
// virtual half-win and half-loss against every opponent they faced.
BradleyTerryFit fit_bradley_terry(const BattleAggregate& agg,
                                  const BradleyTerryOptions& options = {});

// Pairwise score matrix used by the fit: wins + 0.5 * draws, plus the
// regularization. Exposed so tests can evaluate the likelihood.
SquareMatrix<double> bradley_terry_scores(const BattleAggregate& agg,
                                          std::vector<bool>* regularized = nullptr);

double bradley_terry_log_likelihood(const SquareMatrix<double>& scores,
                                    std::span<const double> weights);

struct CentralityResult {
  std::vector<double> scores;
  bool degenerate = false;
  bool converged = true;
  int iterations = 0;
};

// Power iteration on the win matrix A[i][j] = wins(i, j) + 0.5 draws(i, j),
// shifted by the identity so periodic (bipartite) win patterns converge.
CentralityResult compute_eigenvector_centrality(const BattleAggregate& agg,
                                                double tolerance = 1e-10,
                                                int max_iter = 10'000);

struct PageRankResult {
  std::vector<double> scores;
  bool converged = true;
  int iterations = 0;
};

// Damped PageRank on the loser -> winner graph. Draws add 0.5 in both
// directions; dangling nodes spread their mass uniformly.
PageRankResult compute_pagerank(const BattleAggregate& agg, double damping = 0.85,
                                double tolerance = 1e-9, int max_iter = 10'000);

struct CommunityResult {
  // Community per model, numbered 0.. in order of each community's first
  // member.
  std::vector<int> community;
  double modularity = 0.0;
};

// Greedy agglomerative modularity maximization on the undirected battle
// graph (edge weight = battles between the pair). Stops when no merge has
// positive gain; ties go to the lexicographically lowest community pair.
CommunityResult detect_communities(const BattleAggregate& agg);

// Q = sum_c (e_cc - a_c^2) for an arbitrary partition of the battle graph.
double modularity(const BattleAggregate& agg, std::span<const int> partition);

// D / N * 100; nullopt when N == 0. Throws IntegrityError when D > N.
std::optional<double> compute_mcs(std::int64_t self_play_draws, std::int64_t self_play_total);

// (sum s_i / n_i) / (sum 1 / n_i); nullopt for an empty list.
// Throws IntegrityError when some n_i < 1.
std::optional<double> compute_cei(std::span<const std::pair<double, std::int64_t>> votes);
std::optional<double> compute_cei(std::span<const SideVote> votes,
                                  double draw_magnitude = kDefaultDrawMagnitude);

}  // namespace arena::metrics
