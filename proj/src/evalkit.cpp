#include "biview/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

#include "biview/rng.hpp"
#include "biview/util.hpp"

namespace biview::eval {

using nlohmann::json;

Split make_split(const kg::KnowledgeGraph& graph, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw Error("split: train fraction must be in (0,1)");

  const auto counts = kg::class_counts(graph);
  Split out;
  for (const auto& [cls, count] : counts)
    if (count >= spec.min_class_samples) out.retained_classes.push_back(cls);
  if (out.retained_classes.empty())
    throw Error("split: no class passes the min-samples filter (" +
                std::to_string(spec.min_class_samples) + ")");

  std::vector<std::vector<std::uint32_t>> by_class(graph.num_classes());
  for (std::uint32_t v = 0; v < graph.num_nodes(); ++v) {
    const int label = graph.label(v);
    if (label != kg::kUnlabeled) by_class[static_cast<std::size_t>(label)].push_back(v);
  }

  auto split_pool = [&](std::vector<std::uint32_t>& pool, std::uint64_t stream) {
    Rng rng(splitmix64(spec.seed ^ fnv1a64("split")) + stream);
    for (std::size_t i = pool.size(); i > 1; --i)
      std::swap(pool[i - 1], pool[static_cast<std::size_t>(rng.below(i))]);
    if (pool.size() < 2)
      throw Error("split: class has too few samples for both train and test sides");
    auto n_train = static_cast<std::size_t>(
        std::llround(spec.train_fraction * static_cast<double>(pool.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, pool.size() - 1);
    out.train.insert(out.train.end(), pool.begin(),
                     pool.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.insert(out.test.end(), pool.begin() + static_cast<std::ptrdiff_t>(n_train),
                    pool.end());
  };

  if (spec.stratified) {
    for (std::uint32_t cls : out.retained_classes) split_pool(by_class[cls], cls);
  } else {
    std::vector<std::uint32_t> pool;
    for (std::uint32_t cls : out.retained_classes)
      pool.insert(pool.end(), by_class[cls].begin(), by_class[cls].end());
    split_pool(pool, 0);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

namespace {

double gini(const std::vector<std::size_t>& counts, std::size_t total) {
  if (total == 0) return 0.0;
  double g = 1.0;
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    g -= p * p;
  }
  return g;
}

struct BestSplit {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;
};

int build_node(DecisionTree& tree, const Matrix& X, const std::vector<int>& y,
               std::vector<std::size_t>& indices, int depth, const TreeParams& params) {
  DecisionTree::Node node;
  node.counts.assign(tree.num_classes, 0);
  for (std::size_t i : indices) ++node.counts[static_cast<std::size_t>(y[i])];
  const std::size_t total = indices.size();
  const bool pure = *std::max_element(node.counts.begin(), node.counts.end()) == total;

  BestSplit best;
  if (!pure && depth < params.max_depth && total >= 2 * params.min_samples_leaf) {
    std::vector<std::pair<double, int>> column(total);
    std::vector<std::size_t> left_counts(tree.num_classes);
    for (std::size_t f = 0; f < X.cols; ++f) {
      for (std::size_t i = 0; i < total; ++i)
        column[i] = {X(indices[i], f), y[indices[i]]};
      std::sort(column.begin(), column.end());
      std::fill(left_counts.begin(), left_counts.end(), 0);
      std::size_t n_left = 0;
      for (std::size_t i = 0; i + 1 < total; ++i) {
        ++left_counts[static_cast<std::size_t>(column[i].second)];
        ++n_left;
        if (column[i].first == column[i + 1].first) continue;
        if (n_left < params.min_samples_leaf || total - n_left < params.min_samples_leaf)
          continue;
        double right_gini_counts = 0.0;
        {
          double g = 1.0;
          for (std::size_t c = 0; c < tree.num_classes; ++c) {
            const double p = static_cast<double>(node.counts[c] - left_counts[c]) /
                             static_cast<double>(total - n_left);
            g -= p * p;
          }
          right_gini_counts = g;
        }
        const double impurity =
            (static_cast<double>(n_left) * gini(left_counts, n_left) +
             static_cast<double>(total - n_left) * right_gini_counts) /
            static_cast<double>(total);
        const double threshold = column[i].first + (column[i + 1].first - column[i].first) / 2.0;
        if (!best.found || impurity < best.impurity) {
          best = {true, static_cast<int>(f), threshold, impurity};
        }
      }
    }
  }

  const int node_index = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back(node);
  if (!best.found) return node_index;

  std::vector<std::size_t> left_idx, right_idx;
  for (std::size_t i : indices) {
    (X(i, static_cast<std::size_t>(best.feature)) <= best.threshold ? left_idx : right_idx)
        .push_back(i);
  }
  tree.nodes[static_cast<std::size_t>(node_index)].feature = best.feature;
  tree.nodes[static_cast<std::size_t>(node_index)].threshold = best.threshold;
  const int left = build_node(tree, X, y, left_idx, depth + 1, params);
  tree.nodes[static_cast<std::size_t>(node_index)].left = left;
  const int right = build_node(tree, X, y, right_idx, depth + 1, params);
  tree.nodes[static_cast<std::size_t>(node_index)].right = right;
  return node_index;
}

}  // namespace

DecisionTree fit_tree(const Matrix& X, const std::vector<int>& y, std::size_t num_classes,
                      const TreeParams& params) {
  if (X.rows == 0 || X.rows != y.size()) throw Error("fit_tree: empty or mismatched input");
  for (int label : y)
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes)
      throw Error("fit_tree: label out of range");
  DecisionTree tree;
  tree.num_classes = num_classes;
  std::vector<std::size_t> indices(X.rows);
  for (std::size_t i = 0; i < X.rows; ++i) indices[i] = i;
  build_node(tree, X, y, indices, 0, params);
  return tree;
}

int tree_predict(const DecisionTree& tree, std::span<const double> x) {
  std::size_t node = 0;
  while (tree.nodes[node].feature >= 0) {
    node = static_cast<std::size_t>(
        x[static_cast<std::size_t>(tree.nodes[node].feature)] <= tree.nodes[node].threshold
            ? tree.nodes[node].left
            : tree.nodes[node].right);
  }
  const auto& counts = tree.nodes[node].counts;
  std::size_t best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c)
    if (counts[c] > counts[best]) best = c;
  return static_cast<int>(best);
}

std::vector<int> tree_predict(const DecisionTree& tree, const Matrix& X) {
  std::vector<int> out(X.rows);
  for (std::size_t i = 0; i < X.rows; ++i) out[i] = tree_predict(tree, X.row(i));
  return out;
}

EvalReport evaluate(const std::vector<int>& predictions, const std::vector<int>& truth,
                    const std::vector<std::string>& class_names) {
  if (predictions.size() != truth.size()) throw Error("evaluate: prediction/truth length mismatch");
  const std::size_t k = class_names.size();
  EvalReport report;
  report.classes = class_names;
  report.test_size = truth.size();
  report.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || static_cast<std::size_t>(truth[i]) >= k || predictions[i] < 0 ||
        static_cast<std::size_t>(predictions[i]) >= k)
      throw Error("evaluate: label out of class-set range");
    ++report.confusion[static_cast<std::size_t>(truth[i])]
                      [static_cast<std::size_t>(predictions[i])];
  }

  std::size_t correct = 0;
  for (std::size_t c = 0; c < k; ++c) correct += report.confusion[c][c];
  report.accuracy =
      truth.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truth.size());

  std::size_t micro_tp = 0, micro_fp = 0, micro_fn = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t tp = report.confusion[c][c];
    std::size_t fn = 0, fp = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j == c) continue;
      fn += report.confusion[c][j];
      fp += report.confusion[j][c];
    }
    ClassMetrics m;
    m.name = class_names[c];
    m.support = tp + fn;
    if (tp + fp > 0)
      m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    else
      m.zero_division = true;
    if (tp + fn > 0)
      m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    else
      m.zero_division = true;
    if (m.precision + m.recall > 0.0)
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    else
      m.zero_division = true;
    report.per_class.push_back(std::move(m));
    micro_tp += tp;
    micro_fp += fp;
    micro_fn += fn;
  }

  std::size_t support_total = 0;
  for (const auto& m : report.per_class) {
    report.macro_precision += m.precision;
    report.macro_recall += m.recall;
    report.macro_f1 += m.f1;
    report.weighted_precision += m.precision * static_cast<double>(m.support);
    report.weighted_recall += m.recall * static_cast<double>(m.support);
    report.weighted_f1 += m.f1 * static_cast<double>(m.support);
    support_total += m.support;
  }
  if (k > 0) {
    report.macro_precision /= static_cast<double>(k);
    report.macro_recall /= static_cast<double>(k);
    report.macro_f1 /= static_cast<double>(k);
  }
  if (support_total > 0) {
    report.weighted_precision /= static_cast<double>(support_total);
    report.weighted_recall /= static_cast<double>(support_total);
    report.weighted_f1 /= static_cast<double>(support_total);
  }
  report.micro_precision =
      micro_tp + micro_fp > 0 ? static_cast<double>(micro_tp) / static_cast<double>(micro_tp + micro_fp) : 0.0;
  report.micro_recall =
      micro_tp + micro_fn > 0 ? static_cast<double>(micro_tp) / static_cast<double>(micro_tp + micro_fn) : 0.0;
  report.micro_f1 = report.micro_precision + report.micro_recall > 0.0
                        ? 2.0 * report.micro_precision * report.micro_recall /
                              (report.micro_precision + report.micro_recall)
                        : 0.0;
  return report;
}

std::string report_to_json(const EvalReport& report) {
  json j;
  j["format"] = 1;
  j["method"] = report.method;
  j["classes"] = report.classes;
  j["accuracy"] = report.accuracy;
  json per_class = json::array();
  for (const auto& m : report.per_class) {
    per_class.push_back({{"class", m.name},
                         {"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1},
                         {"support", m.support},
                         {"zero_division", m.zero_division}});
  }
  j["per_class"] = std::move(per_class);
  j["macro"] = {{"precision", report.macro_precision},
                {"recall", report.macro_recall},
                {"f1", report.macro_f1}};
  j["weighted"] = {{"precision", report.weighted_precision},
                   {"recall", report.weighted_recall},
                   {"f1", report.weighted_f1}};
  j["micro"] = {{"precision", report.micro_precision},
                {"recall", report.micro_recall},
                {"f1", report.micro_f1}};
  j["confusion"] = report.confusion;
  j["test_size"] = report.test_size;
  j["train_size"] = report.train_size;
  j["config_fingerprint"] = report.config_fingerprint;
  if (!report.config_json.empty()) j["config"] = json::parse(report.config_json);
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  json j = json::parse(text);
  if (!j.contains("format") || j["format"].get<int>() != 1)
    throw Error("report JSON: unsupported format version");
  EvalReport report;
  report.method = j.at("method").get<std::string>();
  report.classes = j.at("classes").get<std::vector<std::string>>();
  report.accuracy = j.at("accuracy").get<double>();
  for (const auto& m : j.at("per_class")) {
    ClassMetrics cm;
    cm.name = m.at("class").get<std::string>();
    cm.precision = m.at("precision").get<double>();
    cm.recall = m.at("recall").get<double>();
    cm.f1 = m.at("f1").get<double>();
    cm.support = m.at("support").get<std::size_t>();
    cm.zero_division = m.at("zero_division").get<bool>();
    report.per_class.push_back(std::move(cm));
  }
  report.macro_precision = j.at("macro").at("precision").get<double>();
  report.macro_recall = j.at("macro").at("recall").get<double>();
  report.macro_f1 = j.at("macro").at("f1").get<double>();
  report.weighted_precision = j.at("weighted").at("precision").get<double>();
  report.weighted_recall = j.at("weighted").at("recall").get<double>();
  report.weighted_f1 = j.at("weighted").at("f1").get<double>();
  report.micro_precision = j.at("micro").at("precision").get<double>();
  report.micro_recall = j.at("micro").at("recall").get<double>();
  report.micro_f1 = j.at("micro").at("f1").get<double>();
  report.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
  report.test_size = j.at("test_size").get<std::size_t>();
  report.train_size = j.at("train_size").get<std::size_t>();
  report.config_fingerprint = j.at("config_fingerprint").get<std::string>();
  if (j.contains("config")) report.config_json = j["config"].dump();
  return report;
}

namespace {

// Largest eigenpair of a symmetric matrix by power iteration.
std::pair<double, std::vector<double>> power_iterate(const Matrix& cov, std::uint64_t stream) {
  const std::size_t d = cov.cols;
  Rng rng(splitmix64(fnv1a64("pca-start")) + stream);
  std::vector<double> v(d);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  double norm = l2_norm(v);
  for (double& x : v) x /= norm;

  std::vector<double> next(d);
  for (int iter = 0; iter < 1000; ++iter) {
    for (std::size_t i = 0; i < d; ++i) next[i] = dot(cov.row(i), v);
    norm = l2_norm(next);
    if (norm <= 1e-300) return {0.0, std::vector<double>(d, 0.0)};
    for (double& x : next) x /= norm;
    double delta = 0.0;
    for (std::size_t i = 0; i < d; ++i) delta = std::max(delta, std::abs(next[i] - v[i]));
    // Eigenvectors are defined up to sign; compare against both.
    double delta_neg = 0.0;
    for (std::size_t i = 0; i < d; ++i) delta_neg = std::max(delta_neg, std::abs(next[i] + v[i]));
    v = next;
    if (std::min(delta, delta_neg) < 1e-13) break;
  }
  std::vector<double> cv(d);
  for (std::size_t i = 0; i < d; ++i) cv[i] = dot(cov.row(i), v);
  return {dot(cv, v), v};
}

void fix_sign(std::vector<double>& v) {
  std::size_t arg = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
  if (v[arg] < 0.0)
    for (double& x : v) x = -x;
}

}  // namespace

Pca2Result pca2(const Matrix& embeddings) {
  if (embeddings.rows < 2) throw Error("pca2: need at least 2 rows");
  const std::size_t n = embeddings.rows;
  const std::size_t d = embeddings.cols;

  std::vector<double> mean(d, 0.0);
  for (std::size_t v = 0; v < n; ++v) axpy(1.0, embeddings.row(v), mean);
  for (double& m : mean) m /= static_cast<double>(n);

  Matrix centered(n, d);
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t j = 0; j < d; ++j) centered(v, j) = embeddings(v, j) - mean[j];

  Matrix cov(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      double s = 0.0;
      for (std::size_t v = 0; v < n; ++v) s += centered(v, i) * centered(v, j);
      s /= static_cast<double>(n - 1);
      cov(i, j) = s;
      cov(j, i) = s;
    }

  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) trace += cov(i, i);

  Pca2Result result;
  result.projection = Matrix(n, 2);
  result.components[0].assign(d, 0.0);
  result.components[1].assign(d, 0.0);
  if (trace <= 0.0) {
    result.zero_variance = true;
    return result;
  }

  auto [lambda1, c1] = power_iterate(cov, 1);
  fix_sign(c1);
  Matrix deflated = cov;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) deflated(i, j) -= lambda1 * c1[i] * c1[j];
  auto [lambda2, c2] = power_iterate(deflated, 2);
  // Re-orthogonalize against c1 to keep the pair orthonormal.
  const double proj = dot(std::span<const double>(c2), std::span<const double>(c1));
  for (std::size_t i = 0; i < d; ++i) c2[i] -= proj * c1[i];
  const double c2_norm = l2_norm(c2);
  if (c2_norm > 1e-12)
    for (double& x : c2) x /= c2_norm;
  else
    std::fill(c2.begin(), c2.end(), 0.0);
  fix_sign(c2);

  result.components[0] = c1;
  result.components[1] = c2;
  result.explained_variance_ratio[0] = std::max(0.0, lambda1) / trace;
  result.explained_variance_ratio[1] = std::max(0.0, lambda2) / trace;
  for (std::size_t v = 0; v < n; ++v) {
    result.projection(v, 0) = dot(centered.row(v), std::span<const double>(c1));
    result.projection(v, 1) = dot(centered.row(v), std::span<const double>(c2));
  }
  return result;
}

namespace {

void check_same_classes(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw Error("compare_models: no reports");
  for (const auto& r : reports)
    if (r.classes != reports.front().classes)
      throw Error("compare_models: reports have mismatched class sets");
}

}  // namespace

std::string comparison_csv(const std::vector<EvalReport>& reports) {
  check_same_classes(reports);
  std::string out = "method,accuracy,macro_precision,macro_recall,macro_f1\n";
  for (const auto& r : reports) {
    out += r.method + "," + format_double(r.accuracy) + "," + format_double(r.macro_precision) +
           "," + format_double(r.macro_recall) + "," + format_double(r.macro_f1) + "\n";
  }
  return out;
}

std::string comparison_text(const std::vector<EvalReport>& reports) {
  check_same_classes(reports);
  std::ostringstream out;
  auto line = [&](const std::string& method, const std::string& acc, const std::string& p,
                  const std::string& r, const std::string& f1) {
    out << method;
    out << std::string(method.size() < 12 ? 12 - method.size() : 1, ' ');
    for (const std::string* s : {&acc, &p, &r, &f1}) {
      out << *s;
      out << std::string(s->size() < 18 ? 18 - s->size() : 1, ' ');
    }
    out << "\n";
  };
  line("method", "accuracy", "macro_precision", "macro_recall", "macro_f1");
  for (const auto& r : reports)
    line(r.method, format_double(r.accuracy), format_double(r.macro_precision),
         format_double(r.macro_recall), format_double(r.macro_f1));
  return out.str();
}

}  // namespace biview::eval
