#include "biview/sage.hpp"

#include <algorithm>
#include <cmath>

#include "biview/util.hpp"

namespace biview::sage {

using kg::AdjacencyView;

FeatureMatrix assemble_features(const kg::KnowledgeGraph& graph, const Matrix& n2v,
                                const Matrix& cent, const std::vector<std::uint32_t>& mask) {
  const std::size_t n = graph.num_nodes();
  if (n2v.rows != n && !(n2v.rows == 0 && n2v.cols == 0))
    throw Error("assemble_features: n2v matrix does not cover all nodes");
  if (cent.rows != n && !(cent.rows == 0 && cent.cols == 0))
    throw Error("assemble_features: centrality matrix does not cover all nodes");

  FeatureMatrix out;
  out.blocks.label_dim = graph.num_classes();
  out.blocks.n2v_dim = n2v.rows == n ? n2v.cols : 0;
  out.blocks.cent_dim = cent.rows == n ? cent.cols : 0;
  out.values = Matrix(n, out.blocks.total());

  std::vector<std::uint8_t> masked(n, 0);
  for (std::uint32_t v : mask) {
    if (v >= n) throw Error("assemble_features: mask node out of range");
    masked[v] = 1;
  }

  for (std::size_t v = 0; v < n; ++v) {
    const int label = graph.label(static_cast<std::uint32_t>(v));
    if (label != kg::kUnlabeled && !masked[v])
      out.values(v, out.blocks.label_offset() + static_cast<std::size_t>(label)) = 1.0;
    for (std::size_t j = 0; j < out.blocks.n2v_dim; ++j)
      out.values(v, out.blocks.n2v_offset() + j) = n2v(v, j);
    for (std::size_t j = 0; j < out.blocks.cent_dim; ++j)
      out.values(v, out.blocks.cent_offset() + j) = cent(v, j);
  }
  return out;
}

std::vector<double> aggregate_mean(const Matrix& features, const AdjacencyView& adj,
                                   std::uint32_t v) {
  std::vector<double> mean(features.cols, 0.0);
  auto nbrs = adj.neighbors_of(v);
  if (nbrs.empty()) return mean;
  for (std::uint32_t u : nbrs) axpy(1.0, features.row(u), mean);
  const double inv = 1.0 / static_cast<double>(nbrs.size());
  for (double& x : mean) x *= inv;
  return mean;
}

SageModel make_sage_model(std::size_t feature_dim, std::size_t num_classes, const SageConfig& cfg,
                          Rng& rng) {
  if (cfg.num_layers < 1) throw Error("sage config: num_layers must be >= 1");
  if (cfg.dim < 1) throw Error("sage config: dim must be >= 1");
  SageModel model;
  model.l2_normalize = cfg.l2_normalize;
  std::size_t d_in = feature_dim;
  for (int k = 0; k < cfg.num_layers; ++k) {
    model.layers.push_back(
        nn::make_dense(2 * d_in, static_cast<std::size_t>(cfg.dim), cfg.activation, rng));
    d_in = static_cast<std::size_t>(cfg.dim);
  }
  model.head = nn::make_dense(d_in, num_classes, nn::Activation::identity, rng);
  return model;
}

namespace {

Matrix neighbor_mean(const Matrix& h, const AdjacencyView& adj) {
  Matrix m(h.rows, h.cols);
  for (std::uint32_t v = 0; v < h.rows; ++v) {
    auto nbrs = adj.neighbors_of(v);
    if (nbrs.empty()) continue;
    auto out = m.row(v);
    for (std::uint32_t u : nbrs) axpy(1.0, h.row(u), out);
    const double inv = 1.0 / static_cast<double>(nbrs.size());
    for (double& x : out) x *= inv;
  }
  return m;
}

Matrix concat_self_mean(const Matrix& h, const Matrix& m) {
  Matrix x(h.rows, 2 * h.cols);
  for (std::size_t v = 0; v < h.rows; ++v) {
    std::copy(h.row(v).begin(), h.row(v).end(), x.row(v).begin());
    std::copy(m.row(v).begin(), m.row(v).end(),
              x.row(v).begin() + static_cast<std::ptrdiff_t>(h.cols));
  }
  return x;
}

constexpr double kNormEps = 1e-12;

struct SageForwardCache {
  std::vector<nn::DenseCache> layer_caches;
  Matrix prenorm;              // H_K before row normalization
  std::vector<double> norms;   // row L2 norms of prenorm
  Matrix output;               // final embedding
};

Matrix forward_internal(const SageModel& model, const Matrix& features, const AdjacencyView& adj,
                        SageForwardCache* cache) {
  if (features.cols != model.layers.front().in_dim() / 2)
    throw Error("sage forward: feature dim does not match model layer 0");
  Matrix h = features;
  if (cache) cache->layer_caches.resize(model.layers.size());
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    Matrix x = concat_self_mean(h, neighbor_mean(h, adj));
    if (cache)
      h = nn::forward_cached(model.layers[k], x, cache->layer_caches[k]);
    else
      h = nn::forward(model.layers[k], x);
  }
  if (cache) cache->prenorm = h;
  if (model.l2_normalize) {
    if (cache) cache->norms.assign(h.rows, 0.0);
    for (std::size_t v = 0; v < h.rows; ++v) {
      const double norm = l2_norm(h.row(v));
      if (cache) cache->norms[v] = norm;
      if (norm > kNormEps)
        for (double& x : h.row(v)) x /= norm;
    }
  }
  if (cache) cache->output = h;
  return h;
}

struct SageGrads {
  std::vector<nn::DenseGrads> layers;
  nn::DenseGrads head;
};

SageGrads zero_sage_grads(const SageModel& model) {
  SageGrads g;
  for (const auto& layer : model.layers) g.layers.push_back(nn::zero_grads(layer));
  g.head = nn::zero_grads(model.head);
  return g;
}

// Backprop of the mean aggregation: routes dX (split into self and mean
// halves) back onto dH of the previous layer.
Matrix backprop_concat_mean(const Matrix& dX, const AdjacencyView& adj, std::size_t d_in) {
  Matrix dH(dX.rows, d_in);
  for (std::uint32_t v = 0; v < dX.rows; ++v) {
    auto dx = dX.row(v);
    axpy(1.0, dx.subspan(0, d_in), dH.row(v));
    auto nbrs = adj.neighbors_of(v);
    if (nbrs.empty()) continue;
    const double inv = 1.0 / static_cast<double>(nbrs.size());
    auto d_mean = dx.subspan(d_in, d_in);
    for (std::uint32_t u : nbrs) axpy(inv, d_mean, dH.row(u));
  }
  return dH;
}

double head_loss_and_grads(const SageModel& model, const Matrix& emb,
                           const std::vector<std::uint32_t>& train_nodes,
                           const std::vector<int>& labels, SageGrads* grads, Matrix* d_emb) {
  if (train_nodes.empty()) throw Error("sage training: empty train set");
  const double inv = 1.0 / static_cast<double>(train_nodes.size());
  double total = 0.0;
  for (std::uint32_t v : train_nodes) {
    const int y = labels[v];
    if (y < 0) throw Error("sage training: train node is unlabeled");
    auto logits = nn::forward(model.head, emb.row(v));
    auto sx = nn::softmax_xent(logits, static_cast<std::size_t>(y));
    total += sx.loss;
    if (!grads) continue;
    for (std::size_t o = 0; o < model.head.out_dim(); ++o) {
      const double g = sx.grad[o] * inv;
      grads->head.db[o] += g;
      axpy(g, emb.row(v), grads->head.dW.row(o));
      axpy(g, model.head.W.row(o), d_emb->row(v));
    }
  }
  return total * inv;
}

void backward_internal(const SageModel& model, const AdjacencyView& adj,
                       const SageForwardCache& cache, Matrix d_emb, SageGrads& grads) {
  Matrix d = std::move(d_emb);
  if (model.l2_normalize) {
    for (std::size_t v = 0; v < d.rows; ++v) {
      const double r = cache.norms[v];
      if (r <= kNormEps) continue;
      auto y = cache.output.row(v);
      auto dv = d.row(v);
      const double proj = dot(y, dv);
      for (std::size_t j = 0; j < d.cols; ++j) dv[j] = (dv[j] - y[j] * proj) / r;
    }
  }
  for (std::size_t k = model.layers.size(); k-- > 0;) {
    Matrix dX = nn::backward(model.layers[k], cache.layer_caches[k], d, grads.layers[k]);
    d = backprop_concat_mean(dX, adj, model.layers[k].in_dim() / 2);
  }
}

std::vector<double> flatten_grads(const SageModel& model, const SageGrads& grads) {
  std::vector<double> flat;
  flat.reserve(sage_get_params(model).size());
  for (const auto& g : grads.layers) nn::append_grads(g, flat);
  nn::append_grads(grads.head, flat);
  return flat;
}

// Uniform neighbor subsampling without replacement; keeps lists sorted.
AdjacencyView sample_adjacency(const AdjacencyView& adj, std::size_t sample, Rng& rng) {
  AdjacencyView out;
  out.mode = adj.mode;
  const std::size_t n = adj.num_nodes();
  out.offsets.assign(n + 1, 0);
  for (std::uint32_t v = 0; v < n; ++v) {
    auto nbrs = adj.neighbors_of(v);
    auto wts = adj.weights_of(v);
    std::vector<std::size_t> idx(nbrs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (nbrs.size() > sample) {
      for (std::size_t i = 0; i < sample; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
        std::swap(idx[i], idx[j]);
      }
      idx.resize(sample);
      std::sort(idx.begin(), idx.end());
    }
    for (std::size_t i : idx) {
      out.neighbors.push_back(nbrs[i]);
      out.weights.push_back(wts[i]);
    }
    out.offsets[v + 1] = static_cast<std::uint32_t>(out.neighbors.size());
  }
  return out;
}

}  // namespace

Matrix sage_forward(const SageModel& model, const Matrix& features, const AdjacencyView& adj) {
  return forward_internal(model, features, adj, nullptr);
}

double sage_loss(const SageModel& model, const Matrix& features, const AdjacencyView& adj,
                 const std::vector<std::uint32_t>& train_nodes, const std::vector<int>& labels) {
  Matrix emb = forward_internal(model, features, adj, nullptr);
  return head_loss_and_grads(model, emb, train_nodes, labels, nullptr, nullptr);
}

std::vector<double> sage_loss_grads(const SageModel& model, const Matrix& features,
                                    const AdjacencyView& adj,
                                    const std::vector<std::uint32_t>& train_nodes,
                                    const std::vector<int>& labels, double* loss_out) {
  SageForwardCache cache;
  Matrix emb = forward_internal(model, features, adj, &cache);
  SageGrads grads = zero_sage_grads(model);
  Matrix d_emb(emb.rows, emb.cols);
  const double loss = head_loss_and_grads(model, emb, train_nodes, labels, &grads, &d_emb);
  if (loss_out) *loss_out = loss;
  backward_internal(model, adj, cache, std::move(d_emb), grads);
  return flatten_grads(model, grads);
}

std::vector<double> sage_get_params(const SageModel& model) {
  std::vector<double> flat;
  for (const auto& layer : model.layers) nn::append_params(layer, flat);
  nn::append_params(model.head, flat);
  return flat;
}

void sage_set_params(SageModel& model, std::span<const double> params) {
  std::size_t offset = 0;
  for (auto& layer : model.layers) offset = nn::read_params(layer, params, offset);
  offset = nn::read_params(model.head, params, offset);
  if (offset != params.size()) throw Error("sage_set_params: parameter count mismatch");
}

SageTrainResult train_sage(const FeatureMatrix& features, const AdjacencyView& adj,
                           const std::vector<std::uint32_t>& train_nodes,
                           const std::vector<int>& labels, std::size_t num_classes,
                           const SageConfig& cfg) {
  if (train_nodes.empty()) throw Error("train_sage: empty train set");
  Rng rng(splitmix64(cfg.seed ^ fnv1a64("sage-init")));
  SageTrainResult result;
  result.model = make_sage_model(features.blocks.total(), num_classes, cfg, rng);

  nn::OptimizerState opt;
  opt.algo = nn::OptimizerState::Algo::adam;
  opt.lr = cfg.learning_rate;
  std::vector<double> params = sage_get_params(result.model);

  result.epoch_loss.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const AdjacencyView* epoch_adj = &adj;
    AdjacencyView sampled;
    if (cfg.neighbor_sample > 0) {
      Rng sample_rng(splitmix64(cfg.seed ^ fnv1a64("sage-sample")) +
                     static_cast<std::uint64_t>(epoch));
      sampled = sample_adjacency(adj, static_cast<std::size_t>(cfg.neighbor_sample), sample_rng);
      epoch_adj = &sampled;
    }
    double loss = 0.0;
    auto grads =
        sage_loss_grads(result.model, features.values, *epoch_adj, train_nodes, labels, &loss);
    result.epoch_loss.push_back(loss);
    opt.step(params, grads);
    sage_set_params(result.model, params);
  }

  result.embedding.values = sage_forward(result.model, features.values, adj);
  result.embedding.role = EmbeddingRole::sage;
  return result;
}

double influence_score(const Matrix& h_prev, const AdjacencyView& adj, std::uint32_t v) {
  auto nbrs = adj.neighbors_of(v);
  if (nbrs.empty()) throw Error("influence_score: node has no neighbors");
  double total = 0.0;
  for (std::uint32_t u : nbrs) total += l2_dist(h_prev.row(v), h_prev.row(u));
  return total / static_cast<double>(nbrs.size());
}

double influence_score(const std::vector<Matrix>& layers, const AdjacencyView& adj,
                       std::uint32_t v, std::size_t k) {
  if (k < 1 || k > layers.size()) throw Error("influence_score: layer index out of range");
  return influence_score(layers[k - 1], adj, v);
}

}  // namespace biview::sage
