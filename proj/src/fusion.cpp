#include "biview/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "biview/util.hpp"

namespace biview::fusion {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_same_rows(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) throw Error("fusion: views cover different node sets");
}

}  // namespace

Matrix concat_views(const Matrix& n2v, const Matrix& sage) {
  check_same_rows(n2v, sage);
  Matrix cat(n2v.rows, n2v.cols + sage.cols);
  for (std::size_t v = 0; v < n2v.rows; ++v) {
    std::copy(n2v.row(v).begin(), n2v.row(v).end(), cat.row(v).begin());
    std::copy(sage.row(v).begin(), sage.row(v).end(),
              cat.row(v).begin() + static_cast<std::ptrdiff_t>(n2v.cols));
  }
  return cat;
}

GatedFuseResult gated_fuse(const Matrix& n2v, const Matrix& sage, const GatedFusion& gate) {
  check_same_rows(n2v, sage);
  if (n2v.cols != sage.cols)
    throw Error("gated_fuse: views must have equal dimensions (got " +
                std::to_string(n2v.cols) + " and " + std::to_string(sage.cols) + ")");
  if (gate.w_alpha.size() != n2v.cols + sage.cols)
    throw Error("gated_fuse: gate weight size mismatch");

  GatedFuseResult out;
  out.fused.role = EmbeddingRole::fused;
  out.fused.values = Matrix(n2v.rows, n2v.cols);
  out.alpha.resize(n2v.rows);
  const std::size_t d = n2v.cols;
  for (std::size_t v = 0; v < n2v.rows; ++v) {
    double pre = gate.b_alpha;
    for (std::size_t j = 0; j < d; ++j) pre += gate.w_alpha[j] * n2v(v, j);
    for (std::size_t j = 0; j < d; ++j) pre += gate.w_alpha[d + j] * sage(v, j);
    const double alpha = sigmoid(pre);
    out.alpha[v] = alpha;
    for (std::size_t j = 0; j < d; ++j)
      out.fused.values(v, j) = alpha * n2v(v, j) + (1.0 - alpha) * sage(v, j);
  }
  return out;
}

namespace {

double gated_loss_impl(const GatedStack& model, const Matrix& n2v, const Matrix& sage,
                       const std::vector<std::uint32_t>& train_nodes,
                       const std::vector<int>& labels, std::vector<double>* flat_grads) {
  if (train_nodes.empty()) throw Error("gated fusion: empty train set");

  // Resolve the effective (equal-width) views, projecting one side if needed.
  const Matrix* z1 = &n2v;
  const Matrix* z2 = &sage;
  Matrix projected;
  if (model.has_projection) {
    projected = nn::forward(model.projection, model.project_first_view ? n2v : sage);
    (model.project_first_view ? z1 : z2) = &projected;
  }
  const auto fused = gated_fuse(*z1, *z2, model.gate);
  const std::size_t d = z1->cols;
  const double inv = 1.0 / static_cast<double>(train_nodes.size());

  std::vector<double> dw(model.gate.w_alpha.size(), 0.0);
  double db_alpha = 0.0;
  nn::DenseGrads head_grads = nn::zero_grads(model.head);
  nn::DenseGrads proj_grads;
  if (model.has_projection) proj_grads = nn::zero_grads(model.projection);

  double total = 0.0;
  std::vector<double> d_fused(d);
  std::vector<double> d_proj(d);
  for (std::uint32_t v : train_nodes) {
    const int y = labels[v];
    if (y < 0) throw Error("gated fusion: train node is unlabeled");
    auto logits = nn::forward(model.head, fused.fused.values.row(v));
    auto sx = nn::softmax_xent(logits, static_cast<std::size_t>(y));
    total += sx.loss;
    if (!flat_grads) continue;

    std::fill(d_fused.begin(), d_fused.end(), 0.0);
    for (std::size_t o = 0; o < model.head.out_dim(); ++o) {
      const double g = sx.grad[o] * inv;
      head_grads.db[o] += g;
      axpy(g, fused.fused.values.row(v), head_grads.dW.row(o));
      axpy(g, model.head.W.row(o), d_fused);
    }
    double d_alpha = 0.0;
    for (std::size_t j = 0; j < d; ++j) d_alpha += d_fused[j] * ((*z1)(v, j) - (*z2)(v, j));
    const double a = fused.alpha[v];
    const double d_pre = d_alpha * a * (1.0 - a);
    for (std::size_t j = 0; j < d; ++j) {
      dw[j] += d_pre * (*z1)(v, j);
      dw[d + j] += d_pre * (*z2)(v, j);
    }
    db_alpha += d_pre;

    if (model.has_projection) {
      // The projected view feeds both the convex combination and the gate.
      const double mix = model.project_first_view ? a : 1.0 - a;
      const std::size_t gate_offset = model.project_first_view ? 0 : d;
      for (std::size_t j = 0; j < d; ++j)
        d_proj[j] = d_fused[j] * mix + d_pre * model.gate.w_alpha[gate_offset + j];
      const Matrix& raw = model.project_first_view ? n2v : sage;
      for (std::size_t j = 0; j < d; ++j) {
        proj_grads.db[j] += d_proj[j];
        axpy(d_proj[j], raw.row(v), proj_grads.dW.row(j));
      }
    }
  }

  if (flat_grads) {
    flat_grads->clear();
    flat_grads->insert(flat_grads->end(), dw.begin(), dw.end());
    flat_grads->push_back(db_alpha);
    nn::append_grads(head_grads, *flat_grads);
    if (model.has_projection) nn::append_grads(proj_grads, *flat_grads);
  }
  return total * inv;
}

}  // namespace

double gated_loss(const GatedStack& model, const Matrix& n2v, const Matrix& sage,
                  const std::vector<std::uint32_t>& train_nodes, const std::vector<int>& labels) {
  return gated_loss_impl(model, n2v, sage, train_nodes, labels, nullptr);
}

std::vector<double> gated_loss_grads(const GatedStack& model, const Matrix& n2v,
                                     const Matrix& sage,
                                     const std::vector<std::uint32_t>& train_nodes,
                                     const std::vector<int>& labels, double* loss_out) {
  std::vector<double> grads;
  const double loss = gated_loss_impl(model, n2v, sage, train_nodes, labels, &grads);
  if (loss_out) *loss_out = loss;
  return grads;
}

std::vector<double> gated_get_params(const GatedStack& model) {
  std::vector<double> flat = model.gate.w_alpha;
  flat.push_back(model.gate.b_alpha);
  nn::append_params(model.head, flat);
  if (model.has_projection) nn::append_params(model.projection, flat);
  return flat;
}

void gated_set_params(GatedStack& model, std::span<const double> params) {
  const std::size_t gate_n = model.gate.w_alpha.size();
  std::copy_n(params.begin(), gate_n, model.gate.w_alpha.begin());
  model.gate.b_alpha = params[gate_n];
  std::size_t offset = nn::read_params(model.head, params, gate_n + 1);
  if (model.has_projection) offset = nn::read_params(model.projection, params, offset);
  if (offset != params.size()) throw Error("gated_set_params: parameter count mismatch");
}

GatedTrainResult train_gated(const Matrix& n2v, const Matrix& sage,
                             const std::vector<std::uint32_t>& train_nodes,
                             const std::vector<int>& labels, std::size_t num_classes,
                             const FusionHyper& hyper) {
  check_same_rows(n2v, sage);
  if (train_nodes.empty()) throw Error("train_gated: empty train set");

  Rng rng(splitmix64(hyper.seed ^ fnv1a64("gated-init")));
  GatedTrainResult result;
  const std::size_t d = std::min(n2v.cols, sage.cols);
  if (n2v.cols != sage.cols) {
    result.model.has_projection = true;
    result.model.project_first_view = n2v.cols > sage.cols;
    const std::size_t from = std::max(n2v.cols, sage.cols);
    result.model.projection = nn::make_dense(from, d, nn::Activation::identity, rng);
  }
  result.model.gate.w_alpha.assign(2 * d, 0.0);
  result.model.gate.b_alpha = 0.0;  // alpha starts at 0.5 for every node
  result.model.head = nn::make_dense(d, num_classes, nn::Activation::identity, rng);

  nn::OptimizerState opt;
  opt.lr = hyper.learning_rate;
  std::vector<double> params = gated_get_params(result.model);
  result.epoch_loss.reserve(static_cast<std::size_t>(hyper.epochs));
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    double loss = 0.0;
    auto grads = gated_loss_grads(result.model, n2v, sage, train_nodes, labels, &loss);
    result.epoch_loss.push_back(loss);
    opt.step(params, grads);
    gated_set_params(result.model, params);
  }

  const Matrix* z1 = &n2v;
  const Matrix* z2 = &sage;
  Matrix projected;
  if (result.model.has_projection) {
    projected = nn::forward(result.model.projection,
                            result.model.project_first_view ? n2v : sage);
    (result.model.project_first_view ? z1 : z2) = &projected;
  }
  auto fused = gated_fuse(*z1, *z2, result.model.gate);
  result.fused = std::move(fused.fused);
  result.alpha = std::move(fused.alpha);
  return result;
}

FusionNet make_fusionnet(std::size_t d1, std::size_t d2, std::size_t num_classes,
                         const FusionNetConfig& cfg, Rng& rng) {
  if (cfg.hidden < 1 || cfg.out_dim < 1) throw Error("fusionnet: invalid layer dimensions");
  if (static_cast<std::size_t>(cfg.out_dim) >= d1 + d2)
    throw Error("fusionnet: output dim must be strictly smaller than d1 + d2");
  FusionNet model;
  model.encoder.layers.push_back(nn::make_dense(d1 + d2, static_cast<std::size_t>(cfg.hidden),
                                                nn::Activation::relu, rng));
  model.encoder.layers.push_back(nn::make_dense(static_cast<std::size_t>(cfg.hidden),
                                                static_cast<std::size_t>(cfg.out_dim),
                                                nn::Activation::identity, rng));
  model.head =
      nn::make_dense(static_cast<std::size_t>(cfg.out_dim), num_classes, nn::Activation::identity,
                     rng);
  return model;
}

namespace {

Matrix gather_rows(const Matrix& m, const std::vector<std::uint32_t>& rows) {
  Matrix out(rows.size(), m.cols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(m.row(rows[i]).begin(), m.row(rows[i]).end(), out.row(i).begin());
  return out;
}

double fusionnet_loss_impl(const FusionNet& model, const Matrix& z_cat,
                           const std::vector<std::uint32_t>& train_nodes,
                           const std::vector<int>& labels, std::vector<double>* flat_grads) {
  if (train_nodes.empty()) throw Error("fusionnet: empty train set");
  const Matrix x = gather_rows(z_cat, train_nodes);
  const double inv = 1.0 / static_cast<double>(train_nodes.size());

  std::vector<nn::DenseCache> caches;
  const Matrix enh = flat_grads ? model.encoder.forward_cached(x, caches)
                                : model.encoder.forward(x);

  nn::DenseGrads head_grads = nn::zero_grads(model.head);
  Matrix d_enh(enh.rows, enh.cols);
  double total = 0.0;
  for (std::size_t i = 0; i < train_nodes.size(); ++i) {
    const int y = labels[train_nodes[i]];
    if (y < 0) throw Error("fusionnet: train node is unlabeled");
    auto logits = nn::forward(model.head, enh.row(i));
    auto sx = nn::softmax_xent(logits, static_cast<std::size_t>(y));
    total += sx.loss;
    if (!flat_grads) continue;
    for (std::size_t o = 0; o < model.head.out_dim(); ++o) {
      const double g = sx.grad[o] * inv;
      head_grads.db[o] += g;
      axpy(g, enh.row(i), head_grads.dW.row(o));
      axpy(g, model.head.W.row(o), d_enh.row(i));
    }
  }

  if (flat_grads) {
    std::vector<nn::DenseGrads> enc_grads;
    for (const auto& layer : model.encoder.layers) enc_grads.push_back(nn::zero_grads(layer));
    model.encoder.backward(caches, d_enh, enc_grads);
    flat_grads->clear();
    for (const auto& g : enc_grads) nn::append_grads(g, *flat_grads);
    nn::append_grads(head_grads, *flat_grads);
  }
  return total * inv;
}

}  // namespace

double fusionnet_loss(const FusionNet& model, const Matrix& z_cat,
                      const std::vector<std::uint32_t>& train_nodes,
                      const std::vector<int>& labels) {
  return fusionnet_loss_impl(model, z_cat, train_nodes, labels, nullptr);
}

std::vector<double> fusionnet_loss_grads(const FusionNet& model, const Matrix& z_cat,
                                         const std::vector<std::uint32_t>& train_nodes,
                                         const std::vector<int>& labels, double* loss_out) {
  std::vector<double> grads;
  const double loss = fusionnet_loss_impl(model, z_cat, train_nodes, labels, &grads);
  if (loss_out) *loss_out = loss;
  return grads;
}

std::vector<double> fusionnet_get_params(const FusionNet& model) {
  std::vector<double> flat;
  for (const auto& layer : model.encoder.layers) nn::append_params(layer, flat);
  nn::append_params(model.head, flat);
  return flat;
}

void fusionnet_set_params(FusionNet& model, std::span<const double> params) {
  std::size_t offset = 0;
  for (auto& layer : model.encoder.layers) offset = nn::read_params(layer, params, offset);
  offset = nn::read_params(model.head, params, offset);
  if (offset != params.size()) throw Error("fusionnet_set_params: parameter count mismatch");
}

FusionNetTrainResult fusionnet_train(const Matrix& n2v, const Matrix& sage,
                                     const std::vector<std::uint32_t>& train_nodes,
                                     const std::vector<int>& labels, std::size_t num_classes,
                                     const FusionNetConfig& cfg) {
  const Matrix z_cat = concat_views(n2v, sage);
  Rng rng(splitmix64(cfg.seed ^ fnv1a64("fusionnet-init")));
  FusionNetTrainResult result;
  result.model = make_fusionnet(n2v.cols, sage.cols, num_classes, cfg, rng);

  // Optional validation split for early stopping.
  std::vector<std::uint32_t> fit_nodes = train_nodes;
  std::vector<std::uint32_t> val_nodes;
  if (cfg.early_stop_fraction > 0.0) {
    Rng split_rng(splitmix64(cfg.seed ^ fnv1a64("fusionnet-val")));
    for (std::size_t i = fit_nodes.size(); i > 1; --i)
      std::swap(fit_nodes[i - 1], fit_nodes[static_cast<std::size_t>(split_rng.below(i))]);
    auto n_val = static_cast<std::size_t>(cfg.early_stop_fraction *
                                          static_cast<double>(fit_nodes.size()));
    n_val = std::min(n_val, fit_nodes.size() - 1);
    val_nodes.assign(fit_nodes.end() - static_cast<std::ptrdiff_t>(n_val), fit_nodes.end());
    fit_nodes.resize(fit_nodes.size() - n_val);
  }

  nn::OptimizerState opt;
  opt.lr = cfg.learning_rate;
  std::vector<double> params = fusionnet_get_params(result.model);
  std::vector<double> best_params = params;
  double best_val = std::numeric_limits<double>::infinity();
  int stale_epochs = 0;
  result.epoch_loss.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss = 0.0;
    auto grads = fusionnet_loss_grads(result.model, z_cat, fit_nodes, labels, &loss);
    result.epoch_loss.push_back(loss);
    opt.step(params, grads);
    fusionnet_set_params(result.model, params);
    if (!val_nodes.empty()) {
      const double val = fusionnet_loss(result.model, z_cat, val_nodes, labels);
      if (val < best_val) {
        best_val = val;
        best_params = params;
        stale_epochs = 0;
      } else if (++stale_epochs >= cfg.patience) {
        fusionnet_set_params(result.model, best_params);
        break;
      }
    }
  }

  result.enhanced.values = result.model.encoder.forward(z_cat);
  result.enhanced.role = EmbeddingRole::enhanced;
  return result;
}

Matrix predict_proba(const FusionNet& model, const Matrix& n2v, const Matrix& sage) {
  const Matrix enh = model.encoder.forward(concat_views(n2v, sage));
  Matrix probs(enh.rows, model.head.out_dim());
  for (std::size_t v = 0; v < enh.rows; ++v) {
    auto logits = nn::forward(model.head, enh.row(v));
    auto sm = nn::softmax(logits);
    std::copy(sm.begin(), sm.end(), probs.row(v).begin());
  }
  return probs;
}

Matrix predict_proba(const GatedStack& model, const Matrix& n2v, const Matrix& sage) {
  const Matrix* z1 = &n2v;
  const Matrix* z2 = &sage;
  Matrix projected;
  if (model.has_projection) {
    projected = nn::forward(model.projection, model.project_first_view ? n2v : sage);
    (model.project_first_view ? z1 : z2) = &projected;
  }
  const auto fused = gated_fuse(*z1, *z2, model.gate);
  Matrix probs(fused.fused.values.rows, model.head.out_dim());
  for (std::size_t v = 0; v < probs.rows; ++v) {
    auto logits = nn::forward(model.head, fused.fused.values.row(v));
    auto sm = nn::softmax(logits);
    std::copy(sm.begin(), sm.end(), probs.row(v).begin());
  }
  return probs;
}

std::vector<int> argmax_rows(const Matrix& probs) {
  std::vector<int> out(probs.rows);
  for (std::size_t v = 0; v < probs.rows; ++v) {
    auto row = probs.row(v);
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j)
      if (row[j] > row[best]) best = j;
    out[v] = static_cast<int>(best);
  }
  return out;
}

}  // namespace biview::fusion
