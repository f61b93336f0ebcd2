#include "biview/centrality.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "biview/util.hpp"

namespace biview::centrality {

using kg::AdjacencyView;
using kg::DirectionMode;

std::vector<double> degree(const AdjacencyView& adj) {
  const std::size_t n = adj.num_nodes();
  std::vector<double> deg(n, 0.0);
  for (std::uint32_t v = 0; v < n; ++v) deg[v] = adj.weighted_degree(v);
  return deg;
}

PageRankResult pagerank(const AdjacencyView& adj, const PageRankConfig& cfg) {
  if (!(cfg.damping > 0.0 && cfg.damping < 1.0)) throw Error("pagerank: damping must be in (0,1)");
  if (!(cfg.tol > 0.0)) throw Error("pagerank: tol must be positive");
  const std::size_t n = adj.num_nodes();
  PageRankResult result;
  if (n == 0) return result;

  std::vector<double> out_weight(n, 0.0);
  for (std::uint32_t v = 0; v < n; ++v) out_weight[v] = adj.weighted_degree(v);

  std::vector<double> rank(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n, 0.0);
  const double teleport = (1.0 - cfg.damping) / static_cast<double>(n);

  for (result.iterations = 1; result.iterations <= cfg.max_iter; ++result.iterations) {
    double dangling = 0.0;
    for (std::uint32_t v = 0; v < n; ++v)
      if (out_weight[v] <= 0.0) dangling += rank[v];
    const double base = teleport + cfg.damping * dangling / static_cast<double>(n);
    std::fill(next.begin(), next.end(), base);
    for (std::uint32_t v = 0; v < n; ++v) {
      if (out_weight[v] <= 0.0) continue;
      const double share = cfg.damping * rank[v] / out_weight[v];
      auto nbrs = adj.neighbors_of(v);
      auto wts = adj.weights_of(v);
      for (std::size_t i = 0; i < nbrs.size(); ++i) next[nbrs[i]] += share * wts[i];
    }
    double delta = 0.0;
    for (std::uint32_t v = 0; v < n; ++v) delta += std::abs(next[v] - rank[v]);
    rank.swap(next);
    if (delta < cfg.tol) {
      result.scores = std::move(rank);
      return result;
    }
  }
  result.iterations = cfg.max_iter;
  result.converged = false;
  result.scores = std::move(rank);
  return result;
}

std::vector<double> betweenness(const AdjacencyView& adj, bool normalized) {
  const std::size_t n = adj.num_nodes();
  std::vector<double> bc(n, 0.0);
  if (n < 3) return bc;

  std::vector<std::vector<std::uint32_t>> preds(n);
  std::vector<std::uint64_t> sigma(n);
  std::vector<std::int64_t> dist(n);
  std::vector<double> delta(n);
  std::vector<std::uint32_t> order;
  order.reserve(n);

  for (std::uint32_t s = 0; s < n; ++s) {
    for (auto& p : preds) p.clear();
    std::fill(sigma.begin(), sigma.end(), 0);
    std::fill(dist.begin(), dist.end(), -1);
    order.clear();
    sigma[s] = 1;
    dist[s] = 0;
    std::queue<std::uint32_t> queue;
    queue.push(s);
    while (!queue.empty()) {
      std::uint32_t v = queue.front();
      queue.pop();
      order.push_back(v);
      for (std::uint32_t w : adj.neighbors_of(v)) {
        if (w == v) continue;  // self-loops never lie on shortest paths
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      std::uint32_t w = *it;
      for (std::uint32_t v : preds[w])
        delta[v] += static_cast<double>(sigma[v]) / static_cast<double>(sigma[w]) * (1.0 + delta[w]);
      if (w != s) bc[w] += delta[w];
    }
  }

  const bool undirected = adj.mode == DirectionMode::undirected_collapsed;
  if (undirected)
    for (double& v : bc) v /= 2.0;
  if (normalized) {
    const double pairs = static_cast<double>(n - 1) * static_cast<double>(n - 2) /
                         (undirected ? 2.0 : 1.0);
    if (pairs > 0.0)
      for (double& v : bc) v /= pairs;
  }
  return bc;
}

namespace {

void minmax_normalize_column(Matrix& m, std::size_t col) {
  double lo = m(0, col), hi = m(0, col);
  for (std::size_t r = 1; r < m.rows; ++r) {
    lo = std::min(lo, m(r, col));
    hi = std::max(hi, m(r, col));
  }
  const double range = hi - lo;
  for (std::size_t r = 0; r < m.rows; ++r)
    m(r, col) = range > 0.0 ? (m(r, col) - lo) / range : 0.0;
}

}  // namespace

CentralityVector centrality_vector(const kg::KnowledgeGraph& graph, const CentralityConfig& cfg,
                                   DirectionMode mode) {
  const auto adj = kg::build_adjacency(graph, mode);
  const std::size_t n = adj.num_nodes();
  const auto deg = degree(adj);
  const auto pr = pagerank(adj, cfg.pagerank);
  const auto bc = betweenness(adj, cfg.betweenness_normalized);

  CentralityVector out;
  out.pagerank_converged = pr.converged;
  out.values = Matrix(n, CentralityVector::kDim);
  for (std::size_t v = 0; v < n; ++v) {
    out.values(v, 0) = deg[v];
    out.values(v, 1) = n > 0 ? pr.scores[v] : 0.0;
    out.values(v, 2) = bc[v];
  }
  if (cfg.minmax_normalize && n > 0)
    for (std::size_t c = 0; c < CentralityVector::kDim; ++c) minmax_normalize_column(out.values, c);
  return out;
}

}  // namespace biview::centrality
