#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "biview/graph.hpp"
#include "biview/matrix.hpp"
#include "biview/rng.hpp"

namespace biview::n2v {

struct WalkConfig {
  double p = 1.0;            // return parameter
  double q = 1.0;            // in-out parameter
  int walk_length = 80;      // nodes per walk, including the start
  int walks_per_node = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

// Second-order transition distribution over the neighbors of v (in neighbor
// list order), given the previously visited node t. Bias cases:
//   x == t            -> 1/p
//   x adjacent to t   -> 1
//   otherwise         -> 1/q
// each multiplied by the cumulative edge weight w_vx, then normalized.
std::vector<double> transition_probs(const kg::AdjacencyView& adj, std::uint32_t t,
                                     std::uint32_t v, const WalkConfig& cfg);

// First-order distribution proportional to w_vx alone.
std::vector<double> first_order_probs(const kg::AdjacencyView& adj, std::uint32_t v);

// Samples walk steps. Alias tables are built lazily per encountered (t, v)
// pair and cached; very high degree nodes fall back to a linear scan instead
// of caching a table.
class TransitionModel {
 public:
  TransitionModel(const kg::AdjacencyView& adj, const WalkConfig& cfg);

  std::uint32_t step_first(std::uint32_t v, Rng& rng);
  std::uint32_t step(std::uint32_t t, std::uint32_t v, Rng& rng);

 private:
  const kg::AdjacencyView& adj_;
  WalkConfig cfg_;
  bool first_order_only_;  // p == q == 1
  std::vector<AliasTable> first_;  // built on demand, keyed by v
  std::vector<bool> first_built_;
  std::unordered_map<std::uint64_t, AliasTable> cache_;

  static constexpr std::size_t kCacheDegreeCap = 4096;

  std::uint32_t sample_biased(std::uint32_t t, std::uint32_t v, Rng& rng);
};

using WalkCorpus = std::vector<std::vector<std::uint32_t>>;

// walks_per_node walks from every node with at least one neighbor. Walks are
// deterministic for a fixed seed: walk (v, r) draws from its own RNG stream,
// so results do not depend on the thread count.
WalkCorpus generate_walks(const kg::AdjacencyView& adj, const WalkConfig& cfg, int threads = 1);

struct SgnsConfig {
  int window = 10;
  int negatives = 5;
  int epochs = 5;
  double learning_rate = 0.025;  // decays linearly to the floor
  double lr_floor = 1e-4;
  std::uint64_t seed = 0;
  // >1 enables asynchronous (hogwild) updates and gives up determinism.
  int threads = 1;

  void validate() const;
};

// Loss and gradients of one skip-gram-with-negative-sampling example:
//   L = -log sigma(u.v) - sum_k log sigma(-u.v_k)
// where u is the center vector, v the context vector, v_k the negatives.
struct SgnsPairGrad {
  double loss = 0.0;
  std::vector<double> d_center;
  std::vector<double> d_context;
  std::vector<std::vector<double>> d_negatives;
};

SgnsPairGrad sgns_pair_loss_grad(std::span<const double> center, std::span<const double> context,
                                 const std::vector<std::vector<double>>& negatives);

struct SgnsResult {
  EmbeddingMatrix embedding;          // center vectors, role n2v
  std::vector<std::uint8_t> trained;  // 1 if the node occurred in the corpus
  std::vector<double> epoch_loss;     // mean pair loss per epoch
};

// Negatives are drawn from the unigram^(3/4) distribution over corpus tokens.
SgnsResult train_sgns(const WalkCorpus& corpus, std::size_t num_nodes, const SgnsConfig& cfg,
                      int dim);

struct Node2VecResult {
  EmbeddingMatrix embedding;
  std::vector<std::uint8_t> visited;  // isolated nodes keep their init row
  std::vector<double> epoch_loss;
};

Node2VecResult node2vec(const kg::KnowledgeGraph& kg, const WalkConfig& walk_cfg,
                        const SgnsConfig& sgns_cfg, int dim = 64,
                        kg::DirectionMode mode = kg::DirectionMode::undirected_collapsed,
                        int threads = 1);

}  // namespace biview::n2v
