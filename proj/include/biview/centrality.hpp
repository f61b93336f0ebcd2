#pragma once

#include <vector>

#include "biview/graph.hpp"
#include "biview/matrix.hpp"

namespace biview::centrality {

// Weighted degree per node: sum of cumulative neighbor weights.
std::vector<double> degree(const kg::AdjacencyView& adj);

struct PageRankConfig {
  double damping = 0.85;
  double tol = 1e-8;
  int max_iter = 100;
};

struct PageRankResult {
  std::vector<double> scores;  // sums to 1
  int iterations = 0;
  bool converged = true;
};

// Power iteration on the weighted transition matrix with uniform teleport;
// dangling-node mass is redistributed uniformly. Non-convergence is reported
// via the flag, the last iterate is still returned.
PageRankResult pagerank(const kg::AdjacencyView& adj, const PageRankConfig& cfg = {});

// Exact Brandes algorithm over unweighted BFS distances. Self-loops are
// ignored for path counting; endpoints are excluded. On an undirected view
// each unordered pair is counted once. If `normalized`, values are divided by
// (n-1)(n-2)/2 (undirected) or (n-1)(n-2) (directed).
std::vector<double> betweenness(const kg::AdjacencyView& adj, bool normalized = false);

struct CentralityConfig {
  PageRankConfig pagerank;
  bool betweenness_normalized = false;
  // Min-max normalize each column to [0,1]; raw betweenness spans orders of
  // magnitude and would otherwise dominate downstream feature blocks.
  bool minmax_normalize = true;
};

// Per-node structural feature rows [degree, pagerank, betweenness].
struct CentralityVector {
  Matrix values;  // n x 3
  bool pagerank_converged = true;

  static constexpr std::size_t kDim = 3;
};

CentralityVector centrality_vector(const kg::KnowledgeGraph& kg, const CentralityConfig& cfg = {},
                                   kg::DirectionMode mode = kg::DirectionMode::undirected_collapsed);

}  // namespace biview::centrality
