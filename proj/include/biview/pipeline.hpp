#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "biview/centrality.hpp"
#include "biview/evalkit.hpp"
#include "biview/fusion.hpp"
#include "biview/graph.hpp"
#include "biview/sage.hpp"
#include "biview/walks.hpp"

namespace biview::pipeline {

// Stochastic block model; node class = block id, single relation type.
struct SyntheticSpec {
  std::size_t blocks = 4;
  std::size_t block_size = 200;
  double p_in = 0.1;
  double p_out = 0.005;
  // Fraction of edges rewired to a uniform random endpoint; 0 keeps the
  // block structure fully informative.
  double noise_fraction = 0.0;
  std::uint64_t seed = 0;
};

kg::KnowledgeGraph generate_synthetic(const SyntheticSpec& spec);

// Every hyperparameter of the end-to-end run. One global seed fans out to
// per-stage seeds via a splittable hash, so stages stay independent.
struct RunConfig {
  // Input: exactly one of synthetic / graph_json / (edges_csv, labels_csv).
  bool use_synthetic = false;
  SyntheticSpec synthetic;
  std::string graph_json;
  std::string edges_csv;
  std::string labels_csv;

  kg::DirectionMode direction = kg::DirectionMode::undirected_collapsed;
  int n2v_dim = 64;
  n2v::WalkConfig walk;
  n2v::SgnsConfig sgns;
  centrality::CentralityConfig centrality;
  sage::SageConfig sage;
  fusion::FusionNetConfig fusionnet;
  fusion::FusionHyper gated;
  std::string fusion_mode = "fusionnet";  // "fusionnet" | "gated"
  eval::SplitSpec split;
  eval::TreeParams tree;

  // Feed every node's label into the feature block (no test-label masking).
  bool paper_faithful = false;
  std::uint64_t seed = 0;
  int threads = 1;

  std::string canonical_json() const;
  std::string fingerprint() const;  // 16 hex digits of the canonical JSON

  static RunConfig from_json(const std::string& text);
};

struct PipelineResult {
  eval::EvalReport node2vec;
  eval::EvalReport graphsage;
  eval::EvalReport biview;
  std::vector<std::string> warnings;  // e.g. PageRank non-convergence
  std::vector<std::string> written_files;
};

// Three-arm comparison with a shared split: decision tree on (1) Node2Vec
// embeddings, (2) GraphSAGE embeddings, (3) the fused Bi-View embeddings.
// Writes every artifact (graph, centrality, embeddings, reports, confusion
// matrices, PCA projections, comparison table) into out_dir.
PipelineResult run_pipeline(const RunConfig& config, const std::string& out_dir);

struct VerifyResult {
  bool ok = true;
  std::vector<std::string> messages;
};

// Re-checks that every artifact in the directory carries the fingerprint of
// the embedded run configuration.
VerifyResult verify_artifacts(const std::string& dir);

}  // namespace biview::pipeline
