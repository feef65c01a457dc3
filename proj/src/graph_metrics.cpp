#include <algorithm>
#include <cmath>

#include "arena/metrics.hpp"

namespace arena::metrics {
namespace {

double l1_distance(const std::vector<double>& x, const std::vector<double>& y) {
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d += std::abs(x[i] - y[i]);
  return d;
}

SquareMatrix<double> win_matrix(const BattleAggregate& agg) {
  const std::size_t n = agg.size();
  SquareMatrix<double> a(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) a(i, j) = static_cast<double>(agg.wins(i, j)) + 0.5 * static_cast<double>(agg.draws(i, j));
    }
  }
  return a;
}

}  // namespace

CentralityResult compute_eigenvector_centrality(const BattleAggregate& agg, double tolerance,
                                                int max_iter) {
  const std::size_t n = agg.size();
  CentralityResult result;
  if (n == 0) return result;

  const SquareMatrix<double> a = win_matrix(agg);
  std::vector<double> x(n, 1.0 / static_cast<double>(n));

  bool all_zero = true;
  for (std::size_t i = 0; i < n && all_zero; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (a(i, j) != 0.0) {
        all_zero = false;
        break;
      }
    }
  }
  if (all_zero) {
    result.scores = std::move(x);
    result.degenerate = true;
    return result;
  }

  std::vector<double> next(n);
  result.converged = false;
  for (int iter = 0; iter < max_iter; ++iter) {
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double v = x[i];  // identity shift
      for (std::size_t j = 0; j < n; ++j) v += a(i, j) * x[j];
      next[i] = v;
      norm += v;
    }
    for (double& v : next) v /= norm;
    const double delta = l1_distance(next, x);
    x.swap(next);
    result.iterations = iter + 1;
    if (delta < tolerance) {
      result.converged = true;
      break;
    }
  }
  result.scores = std::move(x);
  return result;
}

PageRankResult compute_pagerank(const BattleAggregate& agg, double damping, double tolerance,
                                int max_iter) {
  const std::size_t n = agg.size();
  PageRankResult result;
  if (n == 0) return result;
  if (!(damping >= 0.0 && damping <= 1.0)) throw PreconditionError("damping must be in [0, 1]");

  // flow(i, j): weight of the edge i -> j, i.e. j's wins over i.
  const SquareMatrix<double> wins = win_matrix(agg);
  std::vector<double> out_weight(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out_weight[i] += wins(j, i);
  }

  const double teleport = (1.0 - damping) / static_cast<double>(n);
  std::vector<double> rank(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  result.converged = false;
  for (int iter = 0; iter < max_iter; ++iter) {
    double dangling = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (out_weight[i] == 0.0) dangling += rank[i];
    }
    const double spread = damping * dangling / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
      double inflow = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (out_weight[i] > 0.0 && wins(j, i) > 0.0) inflow += rank[i] * wins(j, i) / out_weight[i];
      }
      next[j] = teleport + spread + damping * inflow;
    }
    double total = 0.0;
    for (double v : next) total += v;
    for (double& v : next) v /= total;
    const double delta = l1_distance(next, rank);
    rank.swap(next);
    result.iterations = iter + 1;
    if (delta < tolerance) {
      result.converged = true;
      break;
    }
  }
  result.scores = std::move(rank);
  return result;
}

double modularity(const BattleAggregate& agg, std::span<const int> partition) {
  const std::size_t n = agg.size();
  double two_m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) two_m += static_cast<double>(agg.battles(i, j));
  }
  if (two_m == 0.0) return 0.0;

  const int communities = n == 0 ? 0 : *std::max_element(partition.begin(), partition.end()) + 1;
  std::vector<double> internal(static_cast<std::size_t>(communities), 0.0);
  std::vector<double> degree(static_cast<std::size_t>(communities), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ci = static_cast<std::size_t>(partition[i]);
    for (std::size_t j = 0; j < n; ++j) {
      const double w = static_cast<double>(agg.battles(i, j));
      degree[ci] += w;
      if (partition[j] == partition[i]) internal[ci] += w;
    }
  }
  double q = 0.0;
  for (std::size_t c = 0; c < internal.size(); ++c) {
    const double a = degree[c] / two_m;
    q += internal[c] / two_m - a * a;
  }
  return q;
}

CommunityResult detect_communities(const BattleAggregate& agg) {
  const std::size_t n = agg.size();
  CommunityResult result;
  result.community.resize(n);
  if (n == 0) return result;

  double two_m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) two_m += static_cast<double>(agg.battles(i, j));
  }

  // e(c, d): fraction of edge ends joining community c to d; a(c): row sum.
  // Community c keeps the lower id when merged, so ids stay model indices.
  SquareMatrix<double> e(n, 0.0);
  std::vector<double> a(n, 0.0);
  std::vector<bool> alive(n, true);
  std::vector<std::size_t> owner(n);
  for (std::size_t i = 0; i < n; ++i) {
    owner[i] = i;
    if (two_m == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      e(i, j) = static_cast<double>(agg.battles(i, j)) / two_m;
      a[i] += e(i, j);
    }
  }

  constexpr double kTieEpsilon = 1e-12;
  while (two_m > 0.0) {
    double best_gain = 0.0;
    std::size_t best_c = n;
    std::size_t best_d = n;
    for (std::size_t c = 0; c < n; ++c) {
      if (!alive[c]) continue;
      for (std::size_t d = c + 1; d < n; ++d) {
        if (!alive[d]) continue;
        const double gain = 2.0 * (e(c, d) - a[c] * a[d]);
        if (gain > kTieEpsilon && (best_c == n || gain > best_gain + kTieEpsilon)) {
          best_gain = gain;
          best_c = c;
          best_d = d;
        }
      }
    }
    if (best_c == n) break;

    // Merge d into c.
    for (std::size_t k = 0; k < n; ++k) {
      if (!alive[k] || k == best_c || k == best_d) continue;
      e(best_c, k) += e(best_d, k);
      e(k, best_c) = e(best_c, k);
    }
    e(best_c, best_c) += e(best_d, best_d) + 2.0 * e(best_c, best_d);
    a[best_c] += a[best_d];
    alive[best_d] = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (owner[i] == best_d) owner[i] = best_c;
    }
  }

  std::vector<int> label(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[owner[i]] < 0) label[owner[i]] = next++;
    result.community[i] = label[owner[i]];
  }
  result.modularity = modularity(agg, result.community);
  return result;
}

}  // namespace arena::metrics
