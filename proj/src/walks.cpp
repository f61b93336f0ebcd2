#include "biview/walks.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "biview/util.hpp"

namespace biview::n2v {

using kg::AdjacencyView;

void WalkConfig::validate() const {
  if (!(p > 0.0)) throw Error("walk config: p must be positive");
  if (!(q > 0.0)) throw Error("walk config: q must be positive");
  if (walk_length < 1) throw Error("walk config: walk_length must be >= 1");
  if (walks_per_node < 0) throw Error("walk config: walks_per_node must be >= 0");
}

void SgnsConfig::validate() const {
  if (window < 1) throw Error("sgns config: window must be >= 1");
  if (negatives < 1) throw Error("sgns config: negatives must be >= 1");
  if (epochs < 1) throw Error("sgns config: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw Error("sgns config: learning rate must be positive");
}

namespace {

std::vector<double> biased_weights(const AdjacencyView& adj, std::uint32_t t, std::uint32_t v,
                                   const WalkConfig& cfg) {
  auto nbrs = adj.neighbors_of(v);
  auto wts = adj.weights_of(v);
  std::vector<double> w(nbrs.size());
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    const std::uint32_t x = nbrs[i];
    double alpha;
    if (x == t)
      alpha = 1.0 / cfg.p;
    else if (adj.adjacent(t, x))
      alpha = 1.0;
    else
      alpha = 1.0 / cfg.q;
    w[i] = alpha * wts[i];
  }
  return w;
}

std::uint64_t walk_stream_seed(std::uint64_t seed, std::uint32_t node, int repeat) {
  return splitmix64(splitmix64(seed ^ fnv1a64("walk")) +
                    (static_cast<std::uint64_t>(node) << 32) +
                    static_cast<std::uint64_t>(repeat));
}

}  // namespace

std::vector<double> transition_probs(const AdjacencyView& adj, std::uint32_t t, std::uint32_t v,
                                     const WalkConfig& cfg) {
  cfg.validate();
  if (adj.degree_count(v) == 0) throw Error("no transition available: node has no neighbors");
  auto w = biased_weights(adj, t, v, cfg);
  double total = 0.0;
  for (double x : w) total += x;
  for (double& x : w) x /= total;
  return w;
}

std::vector<double> first_order_probs(const AdjacencyView& adj, std::uint32_t v) {
  if (adj.degree_count(v) == 0) throw Error("no transition available: node has no neighbors");
  auto wts = adj.weights_of(v);
  std::vector<double> w(wts.begin(), wts.end());
  double total = 0.0;
  for (double x : w) total += x;
  for (double& x : w) x /= total;
  return w;
}

TransitionModel::TransitionModel(const AdjacencyView& adj, const WalkConfig& cfg)
    : adj_(adj),
      cfg_(cfg),
      first_order_only_(cfg.p == 1.0 && cfg.q == 1.0),
      first_(adj.num_nodes()),
      first_built_(adj.num_nodes(), false) {
  cfg_.validate();
}

std::uint32_t TransitionModel::step_first(std::uint32_t v, Rng& rng) {
  auto nbrs = adj_.neighbors_of(v);
  if (nbrs.size() == 1) return nbrs[0];
  if (!first_built_[v]) {
    auto wts = adj_.weights_of(v);
    first_[v] = AliasTable(std::vector<double>(wts.begin(), wts.end()));
    first_built_[v] = true;
  }
  return nbrs[first_[v].sample(rng)];
}

std::uint32_t TransitionModel::step(std::uint32_t t, std::uint32_t v, Rng& rng) {
  if (first_order_only_) return step_first(v, rng);
  auto nbrs = adj_.neighbors_of(v);
  if (nbrs.size() == 1) return nbrs[0];
  return sample_biased(t, v, rng);
}

std::uint32_t TransitionModel::sample_biased(std::uint32_t t, std::uint32_t v, Rng& rng) {
  auto nbrs = adj_.neighbors_of(v);
  if (nbrs.size() > kCacheDegreeCap) {
    // Linear-scan sampling, same distribution as the cached path.
    auto w = biased_weights(adj_, t, v, cfg_);
    double total = 0.0;
    for (double x : w) total += x;
    double r = rng.uniform() * total;
    for (std::size_t i = 0; i < w.size(); ++i) {
      r -= w[i];
      if (r <= 0.0) return nbrs[i];
    }
    return nbrs.back();
  }
  const std::uint64_t key = (static_cast<std::uint64_t>(t) << 32) | v;
  auto it = cache_.find(key);
  if (it == cache_.end())
    it = cache_.emplace(key, AliasTable(biased_weights(adj_, t, v, cfg_))).first;
  return nbrs[it->second.sample(rng)];
}

WalkCorpus generate_walks(const AdjacencyView& adj, const WalkConfig& cfg, int threads) {
  cfg.validate();
  const std::size_t n = adj.num_nodes();

  std::vector<std::uint32_t> starts;
  for (std::uint32_t v = 0; v < n; ++v)
    if (adj.degree_count(v) > 0) starts.push_back(v);

  WalkCorpus corpus(starts.size() * static_cast<std::size_t>(cfg.walks_per_node));

  auto run_range = [&](std::size_t lo, std::size_t hi) {
    TransitionModel model(adj, cfg);
    for (std::size_t si = lo; si < hi; ++si) {
      const std::uint32_t start = starts[si];
      for (int r = 0; r < cfg.walks_per_node; ++r) {
        Rng rng(walk_stream_seed(cfg.seed, start, r));
        auto& walk = corpus[si * static_cast<std::size_t>(cfg.walks_per_node) +
                            static_cast<std::size_t>(r)];
        walk.reserve(static_cast<std::size_t>(cfg.walk_length));
        walk.push_back(start);
        if (cfg.walk_length >= 2) {
          std::uint32_t cur = model.step_first(start, rng);
          walk.push_back(cur);
          while (walk.size() < static_cast<std::size_t>(cfg.walk_length)) {
            if (adj.degree_count(cur) == 0) break;  // directed sink
            const std::uint32_t prev = walk[walk.size() - 2];
            cur = model.step(prev, cur, rng);
            walk.push_back(cur);
          }
        }
      }
    }
  };

  threads = std::max(1, threads);
  if (threads == 1 || starts.size() < 2) {
    run_range(0, starts.size());
  } else {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads),
                                                      starts.size());
    std::vector<std::thread> pool;
    const std::size_t chunk = (starts.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(starts.size(), lo + chunk);
      if (lo < hi) pool.emplace_back(run_range, lo, hi);
    }
    for (auto& t : pool) t.join();
  }
  return corpus;
}

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

SgnsPairGrad sgns_pair_loss_grad(std::span<const double> center, std::span<const double> context,
                                 const std::vector<std::vector<double>>& negatives) {
  const std::size_t d = center.size();
  SgnsPairGrad out;
  out.d_center.assign(d, 0.0);
  out.d_context.assign(d, 0.0);
  out.d_negatives.assign(negatives.size(), std::vector<double>(d, 0.0));

  const double s_pos = sigmoid(dot(center, context));
  out.loss = -std::log(std::max(s_pos, 1e-300));
  const double g_pos = s_pos - 1.0;  // d loss / d (u.v)
  for (std::size_t i = 0; i < d; ++i) {
    out.d_center[i] += g_pos * context[i];
    out.d_context[i] += g_pos * center[i];
  }
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    const double s_neg = sigmoid(dot(center, std::span<const double>(negatives[k])));
    out.loss += -std::log(std::max(1.0 - s_neg, 1e-300));
    for (std::size_t i = 0; i < d; ++i) {
      out.d_center[i] += s_neg * negatives[k][i];
      out.d_negatives[k][i] = s_neg * center[i];
    }
  }
  return out;
}

SgnsResult train_sgns(const WalkCorpus& corpus, std::size_t num_nodes, const SgnsConfig& cfg,
                      int dim) {
  cfg.validate();
  if (dim < 1) throw Error("train_sgns: dim must be >= 1");
  if (corpus.empty()) throw Error("train_sgns: corpus is empty");

  const std::size_t d = static_cast<std::size_t>(dim);
  SgnsResult result;
  result.trained.assign(num_nodes, 0);

  std::vector<std::size_t> counts(num_nodes, 0);
  std::size_t total_tokens = 0;
  for (const auto& walk : corpus) {
    for (std::uint32_t v : walk) {
      if (v >= num_nodes) throw Error("train_sgns: corpus token out of range");
      ++counts[v];
      result.trained[v] = 1;
      ++total_tokens;
    }
  }
  if (total_tokens == 0) throw Error("train_sgns: corpus is empty");

  // Unigram^(3/4) negative table over nodes present in the corpus.
  std::vector<std::uint32_t> vocab;
  std::vector<double> neg_weights;
  for (std::uint32_t v = 0; v < num_nodes; ++v) {
    if (counts[v] > 0) {
      vocab.push_back(v);
      neg_weights.push_back(std::pow(static_cast<double>(counts[v]), 0.75));
    }
  }
  AliasTable neg_table(neg_weights);

  Rng init_rng(splitmix64(cfg.seed ^ fnv1a64("sgns-init")));
  Matrix syn0(num_nodes, d);  // center vectors, uniform in [-0.5/d, 0.5/d]
  for (double& w : syn0.data) w = init_rng.uniform(-0.5 / static_cast<double>(d),
                                                   0.5 / static_cast<double>(d));
  Matrix syn1(num_nodes, d);  // context vectors, zero-initialized

  const std::size_t total_positions =
      static_cast<std::size_t>(cfg.epochs) * total_tokens;
  result.epoch_loss.assign(static_cast<std::size_t>(cfg.epochs), 0.0);

  std::atomic<std::size_t> processed{0};
  std::vector<double> epoch_loss_acc(static_cast<std::size_t>(cfg.epochs), 0.0);
  std::vector<std::size_t> epoch_pairs(static_cast<std::size_t>(cfg.epochs), 0);

  auto train_walks = [&](std::size_t walk_lo, std::size_t walk_hi, int epoch,
                         double& loss_acc, std::size_t& pair_count) {
    std::vector<double> grad_u(d);
    for (std::size_t wi = walk_lo; wi < walk_hi; ++wi) {
      const auto& walk = corpus[wi];
      Rng rng(splitmix64(cfg.seed ^ fnv1a64("sgns-train")) +
              splitmix64((static_cast<std::uint64_t>(epoch) << 40) + wi));
      for (std::size_t pos = 0; pos < walk.size(); ++pos) {
        const std::size_t done = processed.fetch_add(1, std::memory_order_relaxed);
        const double progress =
            static_cast<double>(done) / static_cast<double>(total_positions);
        const double lr = std::max(cfg.lr_floor, cfg.learning_rate * (1.0 - progress));

        const std::uint32_t center = walk[pos];
        double* u = syn0.data.data() + static_cast<std::size_t>(center) * d;
        const std::size_t lo = pos >= static_cast<std::size_t>(cfg.window)
                                   ? pos - static_cast<std::size_t>(cfg.window)
                                   : 0;
        const std::size_t hi = std::min(walk.size() - 1, pos + static_cast<std::size_t>(cfg.window));
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == pos) continue;
          const std::uint32_t context = walk[j];
          std::fill(grad_u.begin(), grad_u.end(), 0.0);

          double* v_pos = syn1.data.data() + static_cast<std::size_t>(context) * d;
          double dp = 0.0;
          for (std::size_t i = 0; i < d; ++i) dp += u[i] * v_pos[i];
          const double s_pos = sigmoid(dp);
          loss_acc += -std::log(std::max(s_pos, 1e-300));
          const double g_pos = (s_pos - 1.0) * lr;
          for (std::size_t i = 0; i < d; ++i) {
            grad_u[i] += g_pos * v_pos[i];
            v_pos[i] -= g_pos * u[i];
          }

          for (int k = 0; k < cfg.negatives; ++k) {
            const std::uint32_t neg = vocab[neg_table.sample(rng)];
            if (neg == context) continue;
            double* v_neg = syn1.data.data() + static_cast<std::size_t>(neg) * d;
            double dn = 0.0;
            for (std::size_t i = 0; i < d; ++i) dn += u[i] * v_neg[i];
            const double s_neg = sigmoid(dn);
            loss_acc += -std::log(std::max(1.0 - s_neg, 1e-300));
            const double g_neg = s_neg * lr;
            for (std::size_t i = 0; i < d; ++i) {
              grad_u[i] += g_neg * v_neg[i];
              v_neg[i] -= g_neg * u[i];
            }
          }
          for (std::size_t i = 0; i < d; ++i) u[i] -= grad_u[i];
          ++pair_count;
        }
      }
    }
  };

  const int workers = std::max(1, cfg.threads);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto e = static_cast<std::size_t>(epoch);
    if (workers == 1 || corpus.size() < 2) {
      train_walks(0, corpus.size(), epoch, epoch_loss_acc[e], epoch_pairs[e]);
    } else {
      // Hogwild: concurrent unsynchronized updates; opt-in, non-deterministic.
      const std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(workers),
                                                   corpus.size());
      std::vector<double> losses(nw, 0.0);
      std::vector<std::size_t> pairs(nw, 0);
      std::vector<std::thread> pool;
      const std::size_t chunk = (corpus.size() + nw - 1) / nw;
      for (std::size_t w = 0; w < nw; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(corpus.size(), lo + chunk);
        if (lo < hi)
          pool.emplace_back([&, lo, hi, w, epoch] {
            train_walks(lo, hi, epoch, losses[w], pairs[w]);
          });
      }
      for (auto& t : pool) t.join();
      for (std::size_t w = 0; w < nw; ++w) {
        epoch_loss_acc[e] += losses[w];
        epoch_pairs[e] += pairs[w];
      }
    }
    result.epoch_loss[e] =
        epoch_pairs[e] > 0 ? epoch_loss_acc[e] / static_cast<double>(epoch_pairs[e]) : 0.0;
  }

  result.embedding.values = std::move(syn0);
  result.embedding.role = EmbeddingRole::n2v;
  return result;
}

Node2VecResult node2vec(const kg::KnowledgeGraph& graph, const WalkConfig& walk_cfg,
                        const SgnsConfig& sgns_cfg, int dim, kg::DirectionMode mode,
                        int threads) {
  const auto adj = kg::build_adjacency(graph, mode);
  const auto corpus = generate_walks(adj, walk_cfg, threads);
  auto sgns = train_sgns(corpus, graph.num_nodes(), sgns_cfg, dim);
  Node2VecResult out;
  out.embedding = std::move(sgns.embedding);
  out.visited = std::move(sgns.trained);
  out.epoch_loss = std::move(sgns.epoch_loss);
  return out;
}

}  // namespace biview::n2v
