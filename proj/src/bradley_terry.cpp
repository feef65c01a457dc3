// Bradley-Terry fit by minorization-maximization (Hunter 2004). Each
// iteration updates every weight from the previous iterate, which keeps the
// log-likelihood non-decreasing; weights are then rescaled per component.

#include <algorithm>
#include <cmath>
#include <numeric>

#include "arena/metrics.hpp"

namespace arena::metrics {
namespace {

std::vector<int> connected_components(const BattleAggregate& agg, int* count) {
  const std::size_t n = agg.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (agg.battles(i, j) > 0) {
        const std::size_t ri = find(i);
        const std::size_t rj = find(j);
        if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
      }
    }
  }
  std::vector<int> component(n, -1);
  std::vector<int> label_of_root(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = find(i);
    if (label_of_root[root] < 0) label_of_root[root] = next++;
    component[i] = label_of_root[root];
  }
  *count = next;
  return component;
}

void normalize_geometric(std::vector<double>& weights, const std::vector<int>& component,
                         int component_count) {
  std::vector<double> log_sum(static_cast<std::size_t>(component_count), 0.0);
  std::vector<int> members(static_cast<std::size_t>(component_count), 0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const auto c = static_cast<std::size_t>(component[i]);
    log_sum[c] += std::log(weights[i]);
    ++members[c];
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const auto c = static_cast<std::size_t>(component[i]);
    weights[i] /= std::exp(log_sum[c] / members[c]);
  }
}

}  // namespace

SquareMatrix<double> bradley_terry_scores(const BattleAggregate& agg,
                                          std::vector<bool>* regularized) {
  const std::size_t n = agg.size();
  SquareMatrix<double> scores(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) {
        scores(i, j) = static_cast<double>(agg.wins(i, j)) + 0.5 * static_cast<double>(agg.draws(i, j));
      }
    }
  }

  std::vector<bool> flagged(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t battles = agg.competitive_battles(i);
    if (battles == 0) continue;
    const std::int64_t credit = agg.total_wins(i) + agg.total_draws(i);
    const std::int64_t losses = battles - agg.total_wins(i) - agg.total_draws(i);
    const std::int64_t debit = losses + agg.total_draws(i);
    flagged[i] = credit == 0 || debit == 0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!flagged[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (agg.battles(i, j) > 0) {
        scores(i, j) += 0.5;
        scores(j, i) += 0.5;
      }
    }
  }
  if (regularized) *regularized = std::move(flagged);
  return scores;
}

double bradley_terry_log_likelihood(const SquareMatrix<double>& scores,
                                    std::span<const double> weights) {
  double ll = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (i == j || scores(i, j) == 0.0) continue;
      ll += scores(i, j) * (std::log(weights[i]) - std::log(weights[i] + weights[j]));
    }
  }
  return ll;
}

double BradleyTerryFit::weight_of(const BattleAggregate& agg, const ModelId& model) const {
  const auto idx = agg.index_of(model);
  if (!idx) throw PreconditionError("unknown model " + model);
  return weights[*idx];
}

BradleyTerryFit fit_bradley_terry(const BattleAggregate& agg, const BradleyTerryOptions& options) {
  const std::size_t n = agg.size();
  BradleyTerryFit fit;
  fit.component = connected_components(agg, &fit.component_count);
  const SquareMatrix<double> scores = bradley_terry_scores(agg, &fit.regularized);

  std::vector<double> total_score(n, 0.0);
  SquareMatrix<double> games(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      total_score[i] += scores(i, j);
      games(i, j) = scores(i, j) + scores(j, i);
    }
  }

  std::vector<double> weights(n, 1.0);
  std::vector<double> next(n, 1.0);
  if (options.record_log_likelihood) {
    fit.log_likelihood_trace.push_back(bradley_terry_log_likelihood(scores, weights));
  }

  fit.converged = n == 0;
  for (int iter = 0; iter < options.max_iter && n > 0; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      double denom = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i && games(i, j) > 0.0) denom += games(i, j) / (weights[i] + weights[j]);
      }
      // Isolated models keep their weight.
      next[i] = denom > 0.0 ? total_score[i] / denom : weights[i];
      // Keeps a diverging fit (no MLE) finite; it is reported unconverged.
      next[i] = std::clamp(next[i], 1e-150, 1e150);
    }
    normalize_geometric(next, fit.component, fit.component_count);

    double max_rel_change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      max_rel_change = std::max(max_rel_change, std::abs(next[i] - weights[i]) / weights[i]);
    }
    weights.swap(next);
    fit.iterations = iter + 1;
    if (options.record_log_likelihood) {
      fit.log_likelihood_trace.push_back(bradley_terry_log_likelihood(scores, weights));
    }
    if (max_rel_change < options.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.weights = std::move(weights);
  return fit;
}

}  // namespace arena::metrics
