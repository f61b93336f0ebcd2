#include "biview/graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "biview/util.hpp"

namespace biview::kg {

using nlohmann::json;

std::uint32_t KnowledgeGraph::add_node(const std::string& id) {
  auto it = node_index_.find(id);
  if (it != node_index_.end()) return it->second;
  auto idx = static_cast<std::uint32_t>(node_ids_.size());
  node_ids_.push_back(id);
  node_index_.emplace(id, idx);
  labels_.push_back(kUnlabeled);
  return idx;
}

std::uint32_t KnowledgeGraph::add_relation(const std::string& name) {
  auto it = relation_index_.find(name);
  if (it != relation_index_.end()) return it->second;
  auto idx = static_cast<std::uint32_t>(relation_names_.size());
  relation_names_.push_back(name);
  relation_index_.emplace(name, idx);
  return idx;
}

std::uint32_t KnowledgeGraph::add_class(const std::string& name) {
  auto it = class_index_.find(name);
  if (it != class_index_.end()) return it->second;
  auto idx = static_cast<std::uint32_t>(class_names_.size());
  class_names_.push_back(name);
  class_index_.emplace(name, idx);
  return idx;
}

void KnowledgeGraph::add_edge(std::uint32_t src, std::uint32_t rel, std::uint32_t dst,
                              double weight) {
  if (src >= num_nodes() || dst >= num_nodes())
    throw Error("add_edge: node index out of range");
  if (rel >= num_relations()) throw Error("add_edge: relation index out of range");
  if (!(weight > 0.0)) throw Error("add_edge: weight must be positive");
  edges_.push_back({src, rel, dst, weight});
}

void KnowledgeGraph::set_label(std::uint32_t node, std::uint32_t cls) {
  if (node >= num_nodes()) throw Error("set_label: node index out of range");
  if (cls >= num_classes()) throw Error("set_label: class index out of range");
  int cur = labels_[node];
  if (cur != kUnlabeled && cur != static_cast<int>(cls))
    throw Error("conflicting label for node '" + node_ids_[node] + "': '" +
                class_names_[static_cast<std::size_t>(cur)] + "' vs '" + class_names_[cls] + "'");
  labels_[node] = static_cast<int>(cls);
}

std::optional<std::uint32_t> KnowledgeGraph::find_node(const std::string& id) const {
  auto it = node_index_.find(id);
  if (it == node_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint32_t> KnowledgeGraph::find_class(const std::string& name) const {
  auto it = class_index_.find(name);
  if (it == class_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::uint32_t> KnowledgeGraph::labeled_nodes() const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t v = 0; v < labels_.size(); ++v)
    if (labels_[v] != kUnlabeled) out.push_back(v);
  return out;
}

void KnowledgeGraph::validate() const {
  for (const Edge& e : edges_) {
    if (e.src >= num_nodes() || e.dst >= num_nodes()) throw Error("invalid edge endpoint");
    if (e.rel >= num_relations()) throw Error("invalid edge relation");
    if (!(e.weight > 0.0)) throw Error("non-positive edge weight");
  }
  for (int l : labels_) {
    if (l != kUnlabeled && (l < 0 || static_cast<std::size_t>(l) >= num_classes()))
      throw Error("label out of class range");
  }
  if (node_index_.size() != node_ids_.size()) throw Error("node id map is not a bijection");
  for (std::uint32_t v = 0; v < node_ids_.size(); ++v) {
    auto it = node_index_.find(node_ids_[v]);
    if (it == node_index_.end() || it->second != v)
      throw Error("node id map is not a bijection");
  }
}

bool AdjacencyView::adjacent(std::uint32_t v, std::uint32_t x) const {
  auto nbrs = neighbors_of(v);
  return std::binary_search(nbrs.begin(), nbrs.end(), x);
}

double AdjacencyView::weighted_degree(std::uint32_t v) const {
  double s = 0.0;
  for (double w : weights_of(v)) s += w;
  return s;
}

AdjacencyView build_adjacency(const KnowledgeGraph& kg, DirectionMode mode) {
  const std::size_t n = kg.num_nodes();
  // Aggregate parallel edges per (v, x). Self-loop weight is counted once in
  // either mode.
  std::vector<std::map<std::uint32_t, double>> acc(n);
  for (const Edge& e : kg.edges()) {
    acc[e.src][e.dst] += e.weight;
    if (mode == DirectionMode::undirected_collapsed && e.src != e.dst)
      acc[e.dst][e.src] += e.weight;
  }

  AdjacencyView view;
  view.mode = mode;
  view.offsets.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v)
    view.offsets[v + 1] = view.offsets[v] + static_cast<std::uint32_t>(acc[v].size());
  view.neighbors.reserve(view.offsets[n]);
  view.weights.reserve(view.offsets[n]);
  for (std::size_t v = 0; v < n; ++v) {
    for (const auto& [x, w] : acc[v]) {
      view.neighbors.push_back(x);
      view.weights.push_back(w);
    }
  }
  return view;
}

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::string location(const std::string& path, std::size_t line_no) {
  return path + ":" + std::to_string(line_no);
}

}  // namespace

KnowledgeGraph ingest(const std::string& edge_path, const std::string& label_path,
                      const IngestOptions& options) {
  KnowledgeGraph kg;

  if (!edge_path.empty()) {
    auto lines = read_lines(edge_path);
    if (lines.empty()) throw Error(edge_path + ": missing header");
    auto header = split(trim(lines[0]), ',');
    if (header.size() < 3 || trim(header[0]) != "src" || trim(header[1]) != "rel" ||
        trim(header[2]) != "dst" || (header.size() == 4 && trim(header[3]) != "weight") ||
        header.size() > 4)
      throw Error(edge_path + ":1: expected header 'src,rel,dst[,weight]'");
    for (std::size_t i = 1; i < lines.size(); ++i) {
      std::string_view line = trim(lines[i]);
      if (line.empty()) continue;
      auto fields = split(line, ',');
      if (fields.size() != 3 && fields.size() != 4)
        throw Error(location(edge_path, i + 1) + ": expected 3 or 4 fields, got " +
                    std::to_string(fields.size()));
      std::uint32_t src = kg.add_node(std::string(trim(fields[0])));
      std::uint32_t rel = kg.add_relation(std::string(trim(fields[1])));
      std::uint32_t dst = kg.add_node(std::string(trim(fields[2])));
      double w = options.default_weight;
      if (fields.size() == 4 && !trim(fields[3]).empty())
        w = parse_double(fields[3], location(edge_path, i + 1));
      if (!(w > 0.0))
        throw Error(location(edge_path, i + 1) + ": weight must be positive, got " +
                    format_double(w));
      kg.add_edge(src, rel, dst, w);
    }
  }

  if (!label_path.empty()) {
    auto lines = read_lines(label_path);
    if (lines.empty()) throw Error(label_path + ": missing header");
    auto header = split(trim(lines[0]), ',');
    if (header.size() != 2 || trim(header[0]) != "node" || trim(header[1]) != "class")
      throw Error(label_path + ":1: expected header 'node,class'");
    for (std::size_t i = 1; i < lines.size(); ++i) {
      std::string_view line = trim(lines[i]);
      if (line.empty()) continue;
      auto fields = split(line, ',');
      if (fields.size() != 2)
        throw Error(location(label_path, i + 1) + ": expected 2 fields, got " +
                    std::to_string(fields.size()));
      std::uint32_t node = kg.add_node(std::string(trim(fields[0])));
      std::uint32_t cls = kg.add_class(std::string(trim(fields[1])));
      try {
        kg.set_label(node, cls);
      } catch (const Error& e) {
        throw Error(location(label_path, i + 1) + ": " + e.what());
      }
    }
  }

  kg.validate();
  return kg;
}

std::string graph_to_json_string(const KnowledgeGraph& kg) {
  json j;
  j["format"] = 1;
  j["nodes"] = kg.node_ids();
  json rels = json::array();
  for (std::uint32_t r = 0; r < kg.num_relations(); ++r) rels.push_back(kg.relation_name(r));
  j["relations"] = rels;
  j["classes"] = kg.class_names();
  json edges = json::array();
  for (const Edge& e : kg.edges()) edges.push_back({e.src, e.rel, e.dst, e.weight});
  j["edges"] = edges;
  json labels = json::array();
  for (std::uint32_t v = 0; v < kg.num_nodes(); ++v)
    if (kg.label(v) != kUnlabeled) labels.push_back({v, kg.label(v)});
  j["labels"] = labels;
  return j.dump(2) + "\n";
}

KnowledgeGraph graph_from_json_string(const std::string& text) {
  json j = json::parse(text);
  if (!j.contains("format") || j["format"].get<int>() != 1)
    throw Error("graph JSON: unsupported format version");
  KnowledgeGraph kg;
  for (const auto& id : j.at("nodes")) kg.add_node(id.get<std::string>());
  for (const auto& r : j.at("relations")) kg.add_relation(r.get<std::string>());
  for (const auto& c : j.at("classes")) kg.add_class(c.get<std::string>());
  for (const auto& e : j.at("edges"))
    kg.add_edge(e.at(0).get<std::uint32_t>(), e.at(1).get<std::uint32_t>(),
                e.at(2).get<std::uint32_t>(), e.at(3).get<double>());
  for (const auto& l : j.at("labels"))
    kg.set_label(l.at(0).get<std::uint32_t>(), l.at(1).get<std::uint32_t>());
  kg.validate();
  return kg;
}

void save_graph_json(const KnowledgeGraph& kg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  out << graph_to_json_string(kg);
}

KnowledgeGraph load_graph_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return graph_from_json_string(ss.str());
  } catch (const json::exception& e) {
    throw Error(path + ": " + e.what());
  }
}

std::map<std::uint32_t, std::size_t> class_counts(const KnowledgeGraph& kg) {
  std::map<std::uint32_t, std::size_t> counts;
  for (std::uint32_t v = 0; v < kg.num_nodes(); ++v)
    if (kg.label(v) != kUnlabeled) ++counts[static_cast<std::uint32_t>(kg.label(v))];
  return counts;
}

}  // namespace biview::kg
