#pragma once

#include <cstdint>
#include <vector>

#include "biview/graph.hpp"
#include "biview/matrix.hpp"
#include "biview/nn.hpp"

namespace biview::sage {

struct FeatureBlocks {
  std::size_t label_dim = 0;
  std::size_t n2v_dim = 0;
  std::size_t cent_dim = 0;

  std::size_t label_offset() const { return 0; }
  std::size_t n2v_offset() const { return label_dim; }
  std::size_t cent_offset() const { return label_dim + n2v_dim; }
  std::size_t total() const { return label_dim + n2v_dim + cent_dim; }
};

// Structurally enriched initial features: per node the concatenation
// [one-hot label | n2v embedding | centrality vector]. Nodes in `mask`
// (e.g. test nodes) get an all-zero label block so no target leaks in.
struct FeatureMatrix {
  Matrix values;
  FeatureBlocks blocks;
};

FeatureMatrix assemble_features(const kg::KnowledgeGraph& kg, const Matrix& n2v,
                                const Matrix& cent, const std::vector<std::uint32_t>& mask = {});

// Unweighted arithmetic mean of neighbor feature rows; zero vector for
// isolated nodes.
std::vector<double> aggregate_mean(const Matrix& features, const kg::AdjacencyView& adj,
                                   std::uint32_t v);

struct SageConfig {
  int num_layers = 2;
  int dim = 64;  // output dim of every aggregation layer
  int epochs = 50;
  double learning_rate = 1e-3;
  nn::Activation activation = nn::Activation::relu;
  bool l2_normalize = true;
  int neighbor_sample = 0;  // 0 = full neighborhood
  std::uint64_t seed = 0;
};

// Layer k maps the concatenation [h_v | mean of neighbor h] (2 * d_in) to
// d_out through a dense layer; the classifier head maps the final embedding
// to class logits.
struct SageModel {
  std::vector<nn::DenseLayer> layers;
  nn::DenseLayer head;
  bool l2_normalize = true;
};

SageModel make_sage_model(std::size_t feature_dim, std::size_t num_classes, const SageConfig& cfg,
                          Rng& rng);

// Full inductive forward pass over all nodes; final rows L2-normalized when
// the model says so.
Matrix sage_forward(const SageModel& model, const Matrix& features, const kg::AdjacencyView& adj);

// Mean cross-entropy of the classifier head over `train_nodes`.
double sage_loss(const SageModel& model, const Matrix& features, const kg::AdjacencyView& adj,
                 const std::vector<std::uint32_t>& train_nodes, const std::vector<int>& labels);

// Analytic gradient w.r.t. the flat parameter vector (layers then head).
std::vector<double> sage_loss_grads(const SageModel& model, const Matrix& features,
                                    const kg::AdjacencyView& adj,
                                    const std::vector<std::uint32_t>& train_nodes,
                                    const std::vector<int>& labels, double* loss_out = nullptr);

std::vector<double> sage_get_params(const SageModel& model);
void sage_set_params(SageModel& model, std::span<const double> params);

struct SageTrainResult {
  SageModel model;
  EmbeddingMatrix embedding;  // final-layer rows for all nodes, role sage
  std::vector<double> epoch_loss;
};

SageTrainResult train_sage(const FeatureMatrix& features, const kg::AdjacencyView& adj,
                           const std::vector<std::uint32_t>& train_nodes,
                           const std::vector<int>& labels, std::size_t num_classes,
                           const SageConfig& cfg);

// Mean L2 distance between v and its neighbors in `h_prev` (the layer k-1
// representations). Errors on isolated nodes.
double influence_score(const Matrix& h_prev, const kg::AdjacencyView& adj, std::uint32_t v);

// Layered form: uses layers[k-1] as h^(k-1).
double influence_score(const std::vector<Matrix>& layers, const kg::AdjacencyView& adj,
                       std::uint32_t v, std::size_t k);

}  // namespace biview::sage
