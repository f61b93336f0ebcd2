#pragma once

#include <cstdint>
#include <vector>

#include "biview/matrix.hpp"
#include "biview/nn.hpp"

namespace biview::fusion {

// Per-node learned convex combination of the two views:
//   alpha_i = sigmoid(w_alpha . [z_n2v | z_sage] + b_alpha)
//   fused_i = alpha_i * z_n2v + (1 - alpha_i) * z_sage
struct GatedFusion {
  std::vector<double> w_alpha;  // 1 x (d1 + d2)
  double b_alpha = 0.0;
};

struct GatedFuseResult {
  EmbeddingMatrix fused;
  std::vector<double> alpha;
};

// Requires d1 == d2 (the convex combination needs equal dims).
GatedFuseResult gated_fuse(const Matrix& n2v, const Matrix& sage, const GatedFusion& gate);

Matrix concat_views(const Matrix& n2v, const Matrix& sage);

struct GatedStack {
  GatedFusion gate;
  nn::DenseLayer head;  // linear softmax classifier on the fused embedding
  // When the two views have different widths, a learned linear map brings
  // the larger view down to the smaller one before gating.
  bool has_projection = false;
  bool project_first_view = true;
  nn::DenseLayer projection;
};

struct FusionHyper {
  int epochs = 100;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
};

double gated_loss(const GatedStack& model, const Matrix& n2v, const Matrix& sage,
                  const std::vector<std::uint32_t>& train_nodes, const std::vector<int>& labels);
std::vector<double> gated_loss_grads(const GatedStack& model, const Matrix& n2v,
                                     const Matrix& sage,
                                     const std::vector<std::uint32_t>& train_nodes,
                                     const std::vector<int>& labels, double* loss_out = nullptr);
std::vector<double> gated_get_params(const GatedStack& model);
void gated_set_params(GatedStack& model, std::span<const double> params);

struct GatedTrainResult {
  GatedStack model;
  EmbeddingMatrix fused;  // role fused
  std::vector<double> alpha;
  std::vector<double> epoch_loss;
};

GatedTrainResult train_gated(const Matrix& n2v, const Matrix& sage,
                             const std::vector<std::uint32_t>& train_nodes,
                             const std::vector<int>& labels, std::size_t num_classes,
                             const FusionHyper& hyper);

// Supervised encoder over the concatenated views plus a softmax classifier.
// Construction enforces out_dim < d1 + d2 (strict dimensionality reduction).
struct FusionNet {
  nn::Mlp encoder;       // (d1 + d2) -> hidden (relu) -> out (identity)
  nn::DenseLayer head;   // out -> num_classes
};

struct FusionNetConfig {
  int hidden = 128;
  int out_dim = 64;
  int epochs = 100;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  // > 0 carves that fraction of the train nodes into a validation split and
  // stops once validation loss fails to improve for `patience` epochs. Off by
  // default to keep the fixed-epoch training schedule.
  double early_stop_fraction = 0.0;
  int patience = 10;
};

FusionNet make_fusionnet(std::size_t d1, std::size_t d2, std::size_t num_classes,
                         const FusionNetConfig& cfg, Rng& rng);

double fusionnet_loss(const FusionNet& model, const Matrix& z_cat,
                      const std::vector<std::uint32_t>& train_nodes,
                      const std::vector<int>& labels);
std::vector<double> fusionnet_loss_grads(const FusionNet& model, const Matrix& z_cat,
                                         const std::vector<std::uint32_t>& train_nodes,
                                         const std::vector<int>& labels,
                                         double* loss_out = nullptr);
std::vector<double> fusionnet_get_params(const FusionNet& model);
void fusionnet_set_params(FusionNet& model, std::span<const double> params);

struct FusionNetTrainResult {
  FusionNet model;
  EmbeddingMatrix enhanced;  // f_theta output for all nodes, role enhanced
  std::vector<double> epoch_loss;
};

FusionNetTrainResult fusionnet_train(const Matrix& n2v, const Matrix& sage,
                                     const std::vector<std::uint32_t>& train_nodes,
                                     const std::vector<int>& labels, std::size_t num_classes,
                                     const FusionNetConfig& cfg);

// Per-node class distributions (rows sum to 1).
Matrix predict_proba(const FusionNet& model, const Matrix& n2v, const Matrix& sage);
Matrix predict_proba(const GatedStack& model, const Matrix& n2v, const Matrix& sage);

// Hard labels; ties resolve to the lowest class index.
std::vector<int> argmax_rows(const Matrix& probs);

}  // namespace biview::fusion
