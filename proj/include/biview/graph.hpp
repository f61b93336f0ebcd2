#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace biview::kg {

inline constexpr int kUnlabeled = -1;

struct Edge {
  std::uint32_t src = 0;
  std::uint32_t rel = 0;
  std::uint32_t dst = 0;
  double weight = 1.0;
};

// Typed directed multigraph with class-labelled nodes. Immutable once built;
// safe for shared concurrent reads.
class KnowledgeGraph {
 public:
  std::uint32_t add_node(const std::string& id);
  std::uint32_t add_relation(const std::string& name);
  std::uint32_t add_class(const std::string& name);
  void add_edge(std::uint32_t src, std::uint32_t rel, std::uint32_t dst, double weight = 1.0);
  // Throws on a conflicting re-assignment.
  void set_label(std::uint32_t node, std::uint32_t cls);

  std::size_t num_nodes() const { return node_ids_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t num_relations() const { return relation_names_.size(); }
  std::size_t num_classes() const { return class_names_.size(); }

  const std::string& node_id(std::uint32_t v) const { return node_ids_[v]; }
  const std::string& relation_name(std::uint32_t r) const { return relation_names_[r]; }
  const std::string& class_name(std::uint32_t c) const { return class_names_[c]; }
  const std::vector<std::string>& node_ids() const { return node_ids_; }
  const std::vector<std::string>& class_names() const { return class_names_; }

  std::optional<std::uint32_t> find_node(const std::string& id) const;
  std::optional<std::uint32_t> find_class(const std::string& name) const;

  const std::vector<Edge>& edges() const { return edges_; }

  // kUnlabeled for nodes without a class.
  int label(std::uint32_t v) const { return labels_[v]; }
  const std::vector<int>& labels() const { return labels_; }
  std::vector<std::uint32_t> labeled_nodes() const;

  // Checks every structural invariant; throws Error on violation.
  void validate() const;

 private:
  std::vector<std::string> node_ids_;
  std::unordered_map<std::string, std::uint32_t> node_index_;
  std::vector<std::string> relation_names_;
  std::unordered_map<std::string, std::uint32_t> relation_index_;
  std::vector<std::string> class_names_;
  std::unordered_map<std::string, std::uint32_t> class_index_;
  std::vector<Edge> edges_;
  std::vector<int> labels_;
};

enum class DirectionMode { directed, undirected_collapsed };

inline const char* direction_name(DirectionMode m) {
  return m == DirectionMode::directed ? "directed" : "undirected";
}

// Per-node sorted, duplicate-free neighbor lists with cumulative weights
// (parallel edges between the same pair are summed).
struct AdjacencyView {
  DirectionMode mode = DirectionMode::undirected_collapsed;
  std::vector<std::uint32_t> offsets;   // size num_nodes + 1
  std::vector<std::uint32_t> neighbors; // sorted by node index within each list
  std::vector<double> weights;          // cumulative w_vx, parallel to neighbors

  std::size_t num_nodes() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::size_t degree_count(std::uint32_t v) const { return offsets[v + 1] - offsets[v]; }

  std::span<const std::uint32_t> neighbors_of(std::uint32_t v) const {
    return {neighbors.data() + offsets[v], offsets[v + 1] - offsets[v]};
  }
  std::span<const double> weights_of(std::uint32_t v) const {
    return {weights.data() + offsets[v], offsets[v + 1] - offsets[v]};
  }

  bool adjacent(std::uint32_t v, std::uint32_t x) const;
  double weighted_degree(std::uint32_t v) const;
};

AdjacencyView build_adjacency(const KnowledgeGraph& kg, DirectionMode mode);

struct IngestOptions {
  double default_weight = 1.0;
};

// Edge CSV: header `src,rel,dst,weight` (weight column optional).
// Label CSV: header `node,class`. Nodes seen only in the label file become
// isolated nodes. Malformed rows are reported with their line number.
KnowledgeGraph ingest(const std::string& edge_path, const std::string& label_path,
                      const IngestOptions& options = {});

// Versioned JSON serialization (field "format": 1) with explicit index maps.
void save_graph_json(const KnowledgeGraph& kg, const std::string& path);
KnowledgeGraph load_graph_json(const std::string& path);
std::string graph_to_json_string(const KnowledgeGraph& kg);
KnowledgeGraph graph_from_json_string(const std::string& text);

// Histogram over labeled nodes only.
std::map<std::uint32_t, std::size_t> class_counts(const KnowledgeGraph& kg);

}  // namespace biview::kg
