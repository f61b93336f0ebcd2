#include "biview/io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "biview/util.hpp"

namespace biview::io {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  out << content;
}

namespace {

constexpr const char* kFingerprintKey = "# config_fingerprint=";

std::string fingerprint_comment(const std::string& fingerprint) {
  return std::string(kFingerprintKey) + fingerprint + "\n";
}

}  // namespace

void write_embedding_tsv(const std::string& path, const kg::KnowledgeGraph& graph,
                         const EmbeddingMatrix& embedding, const std::string& fingerprint) {
  if (embedding.num_nodes() != graph.num_nodes())
    throw Error("write_embedding_tsv: embedding does not cover all nodes");
  std::string out;
  out += fingerprint_comment(fingerprint);
  out += std::string("# role=") + role_name(embedding.role) + "\n";
  for (std::uint32_t v = 0; v < graph.num_nodes(); ++v) {
    out += graph.node_id(v);
    for (double x : embedding.values.row(v)) {
      out += '\t';
      out += format_double(x);
    }
    out += '\n';
  }
  write_text_file(path, out);
}

EmbeddingMatrix read_embedding_tsv(const std::string& path, const kg::KnowledgeGraph& graph,
                                   std::string* fingerprint) {
  std::istringstream in(read_text_file(path));
  std::string line;
  EmbeddingMatrix emb;
  std::size_t rows_seen = 0;
  std::size_t line_no = 0;
  std::vector<std::uint8_t> seen(graph.num_nodes(), 0);
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (sv.front() == '#') {
      if (sv.substr(0, 21) == "# config_fingerprint=" && fingerprint)
        *fingerprint = std::string(sv.substr(21));
      if (sv.substr(0, 7) == "# role=") emb.role = role_from_name(sv.substr(7));
      continue;
    }
    auto fields = split(sv, '\t');
    if (fields.size() < 2)
      throw Error(path + ":" + std::to_string(line_no) + ": expected node id and values");
    auto node = graph.find_node(std::string(fields[0]));
    if (!node)
      throw Error(path + ":" + std::to_string(line_no) + ": unknown node '" +
                  std::string(fields[0]) + "'");
    const std::size_t dim = fields.size() - 1;
    if (emb.values.rows == 0) emb.values = Matrix(graph.num_nodes(), dim);
    if (dim != emb.values.cols)
      throw Error(path + ":" + std::to_string(line_no) + ": inconsistent embedding dimension");
    if (seen[*node])
      throw Error(path + ":" + std::to_string(line_no) + ": duplicate node row");
    seen[*node] = 1;
    for (std::size_t j = 0; j < dim; ++j)
      emb.values(*node, j) = parse_double(fields[j + 1], path + ":" + std::to_string(line_no));
    ++rows_seen;
  }
  if (rows_seen != graph.num_nodes())
    throw Error(path + ": embedding covers " + std::to_string(rows_seen) + " of " +
                std::to_string(graph.num_nodes()) + " nodes");
  return emb;
}

void write_centrality_csv(const std::string& path, const kg::KnowledgeGraph& graph,
                          const Matrix& values, const std::string& fingerprint) {
  if (values.rows != graph.num_nodes() || values.cols != 3)
    throw Error("write_centrality_csv: expected an n x 3 matrix");
  std::string out;
  out += fingerprint_comment(fingerprint);
  out += "node,degree,pagerank,betweenness\n";
  for (std::uint32_t v = 0; v < graph.num_nodes(); ++v) {
    out += graph.node_id(v) + "," + format_double(values(v, 0)) + "," +
           format_double(values(v, 1)) + "," + format_double(values(v, 2)) + "\n";
  }
  write_text_file(path, out);
}

Matrix read_centrality_csv(const std::string& path, const kg::KnowledgeGraph& graph,
                           std::string* fingerprint) {
  std::istringstream in(read_text_file(path));
  std::string line;
  Matrix values(graph.num_nodes(), 3);
  std::vector<std::uint8_t> seen(graph.num_nodes(), 0);
  std::size_t rows_seen = 0;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (sv.front() == '#') {
      if (sv.substr(0, 21) == "# config_fingerprint=" && fingerprint)
        *fingerprint = std::string(sv.substr(21));
      continue;
    }
    if (!header_seen) {
      if (sv != "node,degree,pagerank,betweenness")
        throw Error(path + ":" + std::to_string(line_no) +
                    ": expected header 'node,degree,pagerank,betweenness'");
      header_seen = true;
      continue;
    }
    auto fields = split(sv, ',');
    if (fields.size() != 4)
      throw Error(path + ":" + std::to_string(line_no) + ": expected 4 fields");
    auto node = graph.find_node(std::string(fields[0]));
    if (!node)
      throw Error(path + ":" + std::to_string(line_no) + ": unknown node '" +
                  std::string(fields[0]) + "'");
    if (seen[*node]) throw Error(path + ":" + std::to_string(line_no) + ": duplicate node row");
    seen[*node] = 1;
    for (std::size_t j = 0; j < 3; ++j)
      values(*node, j) = parse_double(fields[j + 1], path + ":" + std::to_string(line_no));
    ++rows_seen;
  }
  if (rows_seen != graph.num_nodes())
    throw Error(path + ": centrality covers " + std::to_string(rows_seen) + " of " +
                std::to_string(graph.num_nodes()) + " nodes");
  return values;
}

void write_pca_csv(const std::string& path, const kg::KnowledgeGraph& graph,
                   const Matrix& projection, const std::string& fingerprint) {
  if (projection.rows != graph.num_nodes() || projection.cols != 2)
    throw Error("write_pca_csv: expected an n x 2 projection");
  std::string out;
  out += fingerprint_comment(fingerprint);
  out += "node_id,x,y,class\n";
  for (std::uint32_t v = 0; v < graph.num_nodes(); ++v) {
    const int label = graph.label(v);
    out += graph.node_id(v) + "," + format_double(projection(v, 0)) + "," +
           format_double(projection(v, 1)) + "," +
           (label == kg::kUnlabeled ? "" : graph.class_name(static_cast<std::uint32_t>(label))) +
           "\n";
  }
  write_text_file(path, out);
}

void write_confusion_csv(const std::string& path, const eval::EvalReport& report,
                         const std::string& fingerprint) {
  std::string out;
  out += fingerprint_comment(fingerprint);
  out += "true_class";
  for (const auto& c : report.classes) out += ",pred_" + c;
  out += "\n";
  for (std::size_t r = 0; r < report.confusion.size(); ++r) {
    out += report.classes[r];
    for (std::size_t c = 0; c < report.confusion[r].size(); ++c)
      out += "," + std::to_string(report.confusion[r][c]);
    out += "\n";
  }
  write_text_file(path, out);
}

std::string artifact_fingerprint(const std::string& path) {
  const std::string text = read_text_file(path);
  std::string_view sv = trim(text);
  if (!sv.empty() && sv.front() == '{') {
    auto j = nlohmann::json::parse(text);
    if (j.contains("config_fingerprint")) return j["config_fingerprint"].get<std::string>();
    return "";
  }
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string_view lv = trim(line);
    if (lv.substr(0, 21) == "# config_fingerprint=") return std::string(lv.substr(21));
    if (!lv.empty() && lv.front() != '#') break;
  }
  return "";
}

}  // namespace biview::io
