#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "biview/centrality.hpp"
#include "biview/evalkit.hpp"
#include "biview/fusion.hpp"
#include "biview/graph.hpp"
#include "biview/pipeline.hpp"
#include "biview/sage.hpp"
#include "biview/util.hpp"
#include "biview/walks.hpp"

namespace py = pybind11;
using namespace biview;

namespace {

py::array_t<double> matrix_to_numpy(const Matrix& m) {
  py::array_t<double> out({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

Matrix numpy_to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw Error("expected a 2-d array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + m.data.size(), m.data.begin());
  return m;
}

kg::DirectionMode mode_from_flag(bool directed) {
  return directed ? kg::DirectionMode::directed : kg::DirectionMode::undirected_collapsed;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bi-View knowledge-graph embedding pipeline";

  py::register_exception<Error>(m, "BiviewError");

  py::class_<kg::KnowledgeGraph>(m, "KnowledgeGraph")
      .def(py::init<>())
      .def("add_node", &kg::KnowledgeGraph::add_node)
      .def("add_relation", &kg::KnowledgeGraph::add_relation)
      .def("add_class", &kg::KnowledgeGraph::add_class)
      .def("add_edge", &kg::KnowledgeGraph::add_edge, py::arg("src"), py::arg("rel"),
           py::arg("dst"), py::arg("weight") = 1.0)
      .def("set_label", &kg::KnowledgeGraph::set_label)
      .def_property_readonly("num_nodes", &kg::KnowledgeGraph::num_nodes)
      .def_property_readonly("num_edges", &kg::KnowledgeGraph::num_edges)
      .def_property_readonly("num_relations", &kg::KnowledgeGraph::num_relations)
      .def_property_readonly("num_classes", &kg::KnowledgeGraph::num_classes)
      .def("node_ids", &kg::KnowledgeGraph::node_ids)
      .def("class_names", &kg::KnowledgeGraph::class_names)
      .def("labels", &kg::KnowledgeGraph::labels)
      .def("validate", &kg::KnowledgeGraph::validate);

  m.def(
      "ingest",
      [](const std::string& edge_path, const std::string& label_path, double default_weight) {
        kg::IngestOptions options;
        options.default_weight = default_weight;
        return kg::ingest(edge_path, label_path, options);
      },
      py::arg("edge_path"), py::arg("label_path"), py::arg("default_weight") = 1.0);
  m.def("load_graph", &kg::load_graph_json);
  m.def("save_graph", &kg::save_graph_json);
  m.def("class_counts", [](const kg::KnowledgeGraph& g) {
    std::map<std::uint32_t, std::size_t> counts = kg::class_counts(g);
    return counts;
  });

  m.def(
      "synthetic_graph",
      [](std::size_t blocks, std::size_t block_size, double p_in, double p_out,
         double noise_fraction, std::uint64_t seed) {
        pipeline::SyntheticSpec spec;
        spec.blocks = blocks;
        spec.block_size = block_size;
        spec.p_in = p_in;
        spec.p_out = p_out;
        spec.noise_fraction = noise_fraction;
        spec.seed = seed;
        return pipeline::generate_synthetic(spec);
      },
      py::arg("blocks") = 4, py::arg("block_size") = 200, py::arg("p_in") = 0.1,
      py::arg("p_out") = 0.005, py::arg("noise_fraction") = 0.0, py::arg("seed") = 0);

  m.def(
      "centrality_vector",
      [](const kg::KnowledgeGraph& g, bool minmax_normalize, bool directed, double damping,
         double tol, int max_iter) {
        centrality::CentralityConfig cfg;
        cfg.minmax_normalize = minmax_normalize;
        cfg.pagerank.damping = damping;
        cfg.pagerank.tol = tol;
        cfg.pagerank.max_iter = max_iter;
        return matrix_to_numpy(centrality::centrality_vector(g, cfg, mode_from_flag(directed)).values);
      },
      py::arg("graph"), py::arg("minmax_normalize") = true, py::arg("directed") = false,
      py::arg("damping") = 0.85, py::arg("tol") = 1e-8, py::arg("max_iter") = 100,
      "Per-node rows [degree, pagerank, betweenness]");

  m.def(
      "transition_probs",
      [](const kg::KnowledgeGraph& g, std::uint32_t t, std::uint32_t v, double p, double q,
         bool directed) {
        const auto adj = kg::build_adjacency(g, mode_from_flag(directed));
        n2v::WalkConfig cfg;
        cfg.p = p;
        cfg.q = q;
        auto probs = n2v::transition_probs(adj, t, v, cfg);
        auto nbrs = adj.neighbors_of(v);
        std::vector<std::pair<std::uint32_t, double>> out;
        for (std::size_t i = 0; i < probs.size(); ++i) out.emplace_back(nbrs[i], probs[i]);
        return out;
      },
      py::arg("graph"), py::arg("t"), py::arg("v"), py::arg("p") = 1.0, py::arg("q") = 1.0,
      py::arg("directed") = false,
      "Second-order transition distribution as (neighbor, probability) pairs");

  m.def(
      "node2vec",
      [](const kg::KnowledgeGraph& g, int dim, int walk_length, int walks_per_node, double p,
         double q, int window, int negatives, int epochs, std::uint64_t seed, bool directed,
         int threads) {
        n2v::WalkConfig walk;
        walk.p = p;
        walk.q = q;
        walk.walk_length = walk_length;
        walk.walks_per_node = walks_per_node;
        walk.seed = stage_seed(seed, "walks");
        n2v::SgnsConfig sgns;
        sgns.window = window;
        sgns.negatives = negatives;
        sgns.epochs = epochs;
        sgns.seed = stage_seed(seed, "sgns");
        sgns.threads = threads;
        auto result = n2v::node2vec(g, walk, sgns, dim, mode_from_flag(directed), threads);
        return matrix_to_numpy(result.embedding.values);
      },
      py::arg("graph"), py::arg("dim") = 64, py::arg("walk_length") = 80,
      py::arg("walks_per_node") = 10, py::arg("p") = 1.0, py::arg("q") = 1.0,
      py::arg("window") = 10, py::arg("negatives") = 5, py::arg("epochs") = 5,
      py::arg("seed") = 0, py::arg("directed") = false, py::arg("threads") = 1);

  m.def(
      "pca2",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
        auto result = eval::pca2(numpy_to_matrix(a));
        return py::make_tuple(matrix_to_numpy(result.projection),
                              py::make_tuple(result.explained_variance_ratio[0],
                                             result.explained_variance_ratio[1]));
      },
      py::arg("embeddings"), "Returns (n x 2 projection, explained variance ratios)");

  m.def(
      "run",
      [](const std::string& config_json, const std::string& out_dir) {
        auto config = pipeline::RunConfig::from_json(config_json);
        auto result = pipeline::run_pipeline(config, out_dir);
        py::dict out;
        for (const auto* report : {&result.node2vec, &result.graphsage, &result.biview}) {
          py::dict metrics;
          metrics["accuracy"] = report->accuracy;
          metrics["macro_f1"] = report->macro_f1;
          metrics["macro_precision"] = report->macro_precision;
          metrics["macro_recall"] = report->macro_recall;
          out[report->method.c_str()] = metrics;
        }
        return out;
      },
      py::arg("config_json"), py::arg("out_dir"),
      "Full three-arm pipeline; returns headline metrics per method");
}
