#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "biview/graph.hpp"
#include "biview/matrix.hpp"

namespace biview::eval {

struct SplitSpec {
  double train_fraction = 0.8;
  bool stratified = true;
  std::uint64_t seed = 0;
  std::size_t min_class_samples = 200;  // classes below this are dropped entirely
};

struct Split {
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> test;
  std::vector<std::uint32_t> retained_classes;  // original class indices, ascending
};

Split make_split(const kg::KnowledgeGraph& kg, const SplitSpec& spec);

struct TreeParams {
  int max_depth = 12;
  std::size_t min_samples_leaf = 2;
};

// Binary CART with Gini impurity; exhaustive (feature, midpoint-threshold)
// search. Ties resolve to the lowest feature index, then lowest threshold.
struct DecisionTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<std::size_t> counts;  // class histogram of training samples
  };
  std::vector<Node> nodes;
  std::size_t num_classes = 0;
};

DecisionTree fit_tree(const Matrix& X, const std::vector<int>& y, std::size_t num_classes,
                      const TreeParams& params = {});
int tree_predict(const DecisionTree& tree, std::span<const double> x);
std::vector<int> tree_predict(const DecisionTree& tree, const Matrix& X);

struct ClassMetrics {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  bool zero_division = false;  // precision or F1 denominator was zero
};

struct EvalReport {
  std::string method;
  std::vector<std::string> classes;
  std::vector<ClassMetrics> per_class;
  double accuracy = 0.0;
  // macro = unweighted class mean (headline), weighted = support-weighted,
  // micro = pooled counts
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // rows = true, cols = predicted
  std::size_t test_size = 0;
  std::size_t train_size = 0;
  std::string config_fingerprint;
  std::string config_json;  // canonical run configuration the fingerprint hashes
};

// Per-class one-vs-rest precision/recall/F1 with macro and micro aggregates.
// Zero denominators yield 0 and set the per-class flag.
EvalReport evaluate(const std::vector<int>& predictions, const std::vector<int>& truth,
                    const std::vector<std::string>& class_names);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

struct Pca2Result {
  Matrix projection;  // n x 2
  std::array<double, 2> explained_variance_ratio = {0.0, 0.0};
  std::array<std::vector<double>, 2> components;  // orthonormal
  bool zero_variance = false;
};

// Top-2 principal components via power iteration with deflation over the
// covariance matrix. Sign convention: largest-magnitude entry positive.
Pca2Result pca2(const Matrix& embeddings);

// Side-by-side accuracy and macro metrics; requires identical class sets.
std::string comparison_csv(const std::vector<EvalReport>& reports);
std::string comparison_text(const std::vector<EvalReport>& reports);

}  // namespace biview::eval
