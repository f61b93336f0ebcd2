#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "biview/centrality.hpp"
#include "biview/evalkit.hpp"
#include "biview/fusion.hpp"
#include "biview/graph.hpp"
#include "biview/io.hpp"
#include "biview/pipeline.hpp"
#include "biview/sage.hpp"
#include "biview/util.hpp"
#include "biview/walks.hpp"

namespace {

using namespace biview;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitStrictWarning = 2;

kg::DirectionMode direction_from_flag(bool directed) {
  return directed ? kg::DirectionMode::directed : kg::DirectionMode::undirected_collapsed;
}

// Fingerprint of a standalone stage invocation: hash of its own config JSON.
std::string stage_fingerprint(const json& stage_config) {
  return to_hex(fnv1a64(stage_config.dump()));
}

std::string method_for_role(EmbeddingRole role) {
  switch (role) {
    case EmbeddingRole::n2v: return "node2vec";
    case EmbeddingRole::sage: return "graphsage";
    case EmbeddingRole::fused:
    case EmbeddingRole::enhanced: return "biview";
  }
  return "embeddings";
}

struct SplitFlags {
  double train_fraction = 0.8;
  bool stratified = true;
  std::size_t min_class_samples = 200;

  void attach(CLI::App* cmd) {
    cmd->add_option("--train-frac", train_fraction, "Train fraction of the stratified split");
    cmd->add_option("--min-class-samples", min_class_samples,
                    "Drop classes with fewer labeled samples");
    cmd->add_flag("!--no-stratify", stratified, "Disable stratification");
  }

  eval::SplitSpec spec(std::uint64_t global_seed) const {
    eval::SplitSpec s;
    s.train_fraction = train_fraction;
    s.stratified = stratified;
    s.min_class_samples = min_class_samples;
    s.seed = stage_seed(global_seed, "split");
    return s;
  }

  json to_json() const {
    return {{"train_fraction", train_fraction},
            {"stratified", stratified},
            {"min_class_samples", min_class_samples}};
  }
};

int cmd_ingest(const std::string& edges, const std::string& labels, const std::string& out,
               double default_weight) {
  kg::IngestOptions options;
  options.default_weight = default_weight;
  auto graph = kg::ingest(edges, labels, options);
  kg::save_graph_json(graph, out);
  std::cout << "ingested " << graph.num_nodes() << " nodes, " << graph.num_edges() << " edges, "
            << graph.num_classes() << " classes -> " << out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bi-View knowledge-graph embedding pipeline"};
  app.require_subcommand(1);

  // ---- ingest ----------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "Build a graph from edge and label CSV files");
  std::string ingest_edges, ingest_labels, ingest_out;
  double ingest_weight = 1.0;
  ingest->add_option("--edges", ingest_edges, "Edge CSV (src,rel,dst[,weight])");
  ingest->add_option("--labels", ingest_labels, "Label CSV (node,class)");
  ingest->add_option("--out", ingest_out, "Output graph JSON")->required();
  ingest->add_option("--default-weight", ingest_weight, "Weight for rows without one");

  // ---- synth -----------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Generate a stochastic-block-model graph");
  pipeline::SyntheticSpec synth_spec;
  std::string synth_out;
  std::uint64_t synth_seed = 0;
  synth->add_option("--blocks", synth_spec.blocks, "Number of blocks/classes");
  synth->add_option("--block-size", synth_spec.block_size, "Nodes per block");
  synth->add_option("--p-in", synth_spec.p_in, "Intra-block edge probability");
  synth->add_option("--p-out", synth_spec.p_out, "Inter-block edge probability");
  synth->add_option("--noise", synth_spec.noise_fraction, "Fraction of edges rewired at random");
  synth->add_option("--seed", synth_seed, "Seed");
  synth->add_option("--out", synth_out, "Output graph JSON")->required();

  // ---- centrality ------------------------------------------------------
  auto* cent_cmd = app.add_subcommand("centrality", "Write per-node centrality CSV");
  std::string cent_graph, cent_out;
  centrality::CentralityConfig cent_cfg;
  bool cent_directed = false;
  bool cent_strict = false;
  cent_cmd->add_option("--graph", cent_graph, "Graph JSON")->required();
  cent_cmd->add_option("--out", cent_out, "Output CSV")->required();
  cent_cmd->add_option("--damping", cent_cfg.pagerank.damping, "PageRank damping");
  cent_cmd->add_option("--tol", cent_cfg.pagerank.tol, "PageRank tolerance");
  cent_cmd->add_option("--max-iter", cent_cfg.pagerank.max_iter, "PageRank iteration cap");
  cent_cmd->add_flag("--betweenness-normalized", cent_cfg.betweenness_normalized,
                     "Divide betweenness by the pair count");
  cent_cmd->add_flag("!--no-normalize", cent_cfg.minmax_normalize,
                     "Disable per-column min-max normalization");
  cent_cmd->add_flag("--directed", cent_directed, "Directed adjacency instead of collapsed");
  cent_cmd->add_flag("--strict", cent_strict, "Exit 2 on non-convergence");

  // ---- embed-n2v -------------------------------------------------------
  auto* n2v_cmd = app.add_subcommand("embed-n2v", "Train Node2Vec embeddings");
  std::string n2v_graph, n2v_out;
  int n2v_dim = 64;
  n2v::WalkConfig n2v_walk;
  n2v::SgnsConfig n2v_sgns;
  std::uint64_t n2v_seed = 0;
  int n2v_threads = 1;
  bool n2v_directed = false;
  n2v_cmd->add_option("--graph", n2v_graph, "Graph JSON")->required();
  n2v_cmd->add_option("--out", n2v_out, "Output embedding TSV")->required();
  n2v_cmd->add_option("--dim", n2v_dim, "Embedding dimension");
  n2v_cmd->add_option("--walk-length", n2v_walk.walk_length, "Nodes per walk");
  n2v_cmd->add_option("--walks-per-node", n2v_walk.walks_per_node, "Walks per start node");
  n2v_cmd->add_option("--p", n2v_walk.p, "Return parameter");
  n2v_cmd->add_option("--q", n2v_walk.q, "In-out parameter");
  n2v_cmd->add_option("--window", n2v_sgns.window, "Skip-gram context window");
  n2v_cmd->add_option("--negatives", n2v_sgns.negatives, "Negative samples per pair");
  n2v_cmd->add_option("--epochs", n2v_sgns.epochs, "Training epochs over the corpus");
  n2v_cmd->add_option("--lr", n2v_sgns.learning_rate, "Initial learning rate");
  n2v_cmd->add_option("--seed", n2v_seed, "Global seed");
  n2v_cmd->add_option("--threads", n2v_threads, "Worker threads (>1 is non-deterministic SGNS)");
  n2v_cmd->add_flag("--directed", n2v_directed, "Directed walks");

  // ---- embed-sage ------------------------------------------------------
  auto* sage_cmd = app.add_subcommand("embed-sage", "Train GraphSAGE embeddings");
  std::string sage_graph, sage_n2v, sage_cent, sage_out;
  sage::SageConfig sage_cfg;
  SplitFlags sage_split;
  std::uint64_t sage_seed = 0;
  bool sage_paper_faithful = false;
  bool sage_directed = false;
  sage_cmd->add_option("--graph", sage_graph, "Graph JSON")->required();
  sage_cmd->add_option("--n2v", sage_n2v, "Node2Vec embedding TSV")->required();
  sage_cmd->add_option("--centrality", sage_cent, "Centrality CSV")->required();
  sage_cmd->add_option("--out", sage_out, "Output embedding TSV")->required();
  sage_cmd->add_option("--dim", sage_cfg.dim, "Layer output dimension");
  sage_cmd->add_option("--layers", sage_cfg.num_layers, "Aggregation layers");
  sage_cmd->add_option("--epochs", sage_cfg.epochs, "Training epochs");
  sage_cmd->add_option("--lr", sage_cfg.learning_rate, "Learning rate");
  sage_cmd->add_option("--neighbor-sample", sage_cfg.neighbor_sample,
                       "Neighbors sampled per node during training (0 = all)");
  sage_cmd->add_option("--seed", sage_seed, "Global seed");
  sage_cmd->add_flag("--paper-faithful", sage_paper_faithful,
                     "Feed all labels as features (no test masking)");
  sage_cmd->add_flag("--mask-test-labels", [](std::int64_t) {},
                     "Mask test labels out of the feature block (default)");
  sage_cmd->add_flag("--directed", sage_directed, "Directed adjacency");
  sage_split.attach(sage_cmd);

  // ---- fuse ------------------------------------------------------------
  auto* fuse_cmd = app.add_subcommand("fuse", "Fuse two embedding views");
  std::string fuse_graph, fuse_n2v, fuse_sage, fuse_out;
  std::string fuse_mode = "fusionnet";
  fusion::FusionNetConfig fuse_fn;
  fusion::FusionHyper fuse_gated;
  SplitFlags fuse_split;
  std::uint64_t fuse_seed = 0;
  fuse_cmd->add_option("--graph", fuse_graph, "Graph JSON (labels drive the supervision)")
      ->required();
  fuse_cmd->add_option("--n2v", fuse_n2v, "Node2Vec embedding TSV")->required();
  fuse_cmd->add_option("--sage", fuse_sage, "GraphSAGE embedding TSV")->required();
  fuse_cmd->add_option("--out", fuse_out, "Output embedding TSV")->required();
  fuse_cmd->add_option("--fusion", fuse_mode, "fusionnet | gated")
      ->check(CLI::IsMember({"fusionnet", "gated"}));
  fuse_cmd->add_option("--hidden", fuse_fn.hidden, "FusionNet hidden width");
  fuse_cmd->add_option("--out-dim", fuse_fn.out_dim, "FusionNet output dimension");
  fuse_cmd->add_option("--epochs", fuse_fn.epochs, "Training epochs");
  auto* fuse_lr_opt = fuse_cmd->add_option("--lr", fuse_fn.learning_rate, "Learning rate");
  fuse_cmd->add_option("--seed", fuse_seed, "Global seed");
  fuse_split.attach(fuse_cmd);

  // ---- classify --------------------------------------------------------
  auto* classify_cmd = app.add_subcommand("classify", "Decision-tree evaluation of embeddings");
  std::string cls_graph, cls_emb, cls_out, cls_method, cls_confusion, cls_pca;
  eval::TreeParams cls_tree;
  SplitFlags cls_split;
  std::uint64_t cls_seed = 0;
  classify_cmd->add_option("--graph", cls_graph, "Graph JSON")->required();
  classify_cmd->add_option("--embeddings", cls_emb, "Embedding TSV")->required();
  classify_cmd->add_option("--out", cls_out, "Output report JSON")->required();
  classify_cmd->add_option("--method", cls_method, "Method name in the report");
  classify_cmd->add_option("--confusion-out", cls_confusion, "Optional confusion CSV");
  classify_cmd->add_option("--pca-out", cls_pca, "Optional PCA projection CSV");
  classify_cmd->add_option("--max-depth", cls_tree.max_depth, "Tree depth cap");
  classify_cmd->add_option("--min-samples-leaf", cls_tree.min_samples_leaf,
                           "Minimum samples per leaf");
  classify_cmd->add_option("--seed", cls_seed, "Global seed");
  cls_split.attach(classify_cmd);

  // ---- report ----------------------------------------------------------
  auto* report_cmd = app.add_subcommand("report", "Model comparison table from reports");
  std::vector<std::string> report_inputs;
  std::string report_csv, report_txt;
  report_cmd->add_option("--inputs", report_inputs, "Report JSON files")->required()
      ->expected(-1);
  report_cmd->add_option("--out-csv", report_csv, "Comparison CSV path");
  report_cmd->add_option("--out-txt", report_txt, "Comparison text path");

  // ---- run -------------------------------------------------------------
  auto* run_cmd = app.add_subcommand("run", "Full three-arm pipeline");
  std::string run_config_path, run_out_dir;
  bool run_paper_faithful = false;
  bool run_strict = false;
  bool run_synthetic = false;
  std::string run_fusion;
  std::uint64_t run_seed = 0;
  bool run_seed_set = false;
  int run_threads = 0;
  run_cmd->add_option("--config", run_config_path, "Run config JSON");
  run_cmd->add_option("--out-dir", run_out_dir, "Output directory")->required();
  run_cmd->add_flag("--paper-faithful", run_paper_faithful,
                    "Feed all labels as features (no test masking)");
  run_cmd->add_flag("--synthetic", run_synthetic, "Use the built-in SBM input");
  run_cmd->add_option("--fusion", run_fusion, "fusionnet | gated")
      ->check(CLI::IsMember({"fusionnet", "gated"}));
  run_cmd->add_option("--seed", run_seed, "Global seed")->trigger_on_parse()
      ->each([&](const std::string&) { run_seed_set = true; });
  run_cmd->add_option("--threads", run_threads, "Worker cap; 1 is bit-reproducible");
  run_cmd->add_flag("--strict", run_strict, "Exit 2 on numerical warnings");

  // ---- verify ----------------------------------------------------------
  auto* verify_cmd = app.add_subcommand("verify", "Re-check artifact fingerprints");
  std::string verify_dir;
  verify_cmd->add_option("--dir", verify_dir, "Run output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return cmd_ingest(ingest_edges, ingest_labels, ingest_out, ingest_weight);

    if (*synth) {
      pipeline::SyntheticSpec spec = synth_spec;
      spec.seed = synth_seed;
      auto graph = pipeline::generate_synthetic(spec);
      kg::save_graph_json(graph, synth_out);
      std::cout << "generated " << graph.num_nodes() << " nodes, " << graph.num_edges()
                << " edges -> " << synth_out << "\n";
      return kExitOk;
    }

    if (*cent_cmd) {
      auto graph = kg::load_graph_json(cent_graph);
      auto cent = centrality::centrality_vector(graph, cent_cfg,
                                                direction_from_flag(cent_directed));
      json stage = {{"stage", "centrality"},
                    {"graph", cent_graph},
                    {"damping", cent_cfg.pagerank.damping},
                    {"tol", cent_cfg.pagerank.tol},
                    {"max_iter", cent_cfg.pagerank.max_iter},
                    {"betweenness_normalized", cent_cfg.betweenness_normalized},
                    {"minmax_normalize", cent_cfg.minmax_normalize},
                    {"directed", cent_directed}};
      io::write_centrality_csv(cent_out, graph, cent.values, stage_fingerprint(stage));
      if (!cent.pagerank_converged) {
        std::cerr << "warning: pagerank did not converge within max_iter\n";
        if (cent_strict) return kExitStrictWarning;
      }
      std::cout << "wrote " << cent_out << "\n";
      return kExitOk;
    }

    if (*n2v_cmd) {
      auto graph = kg::load_graph_json(n2v_graph);
      n2v::WalkConfig walk = n2v_walk;
      walk.seed = stage_seed(n2v_seed, "walks");
      n2v::SgnsConfig sgns = n2v_sgns;
      sgns.seed = stage_seed(n2v_seed, "sgns");
      sgns.threads = n2v_threads;
      auto result = n2v::node2vec(graph, walk, sgns, n2v_dim,
                                  direction_from_flag(n2v_directed), n2v_threads);
      json stage = {{"stage", "embed-n2v"}, {"graph", n2v_graph},   {"dim", n2v_dim},
                    {"p", walk.p},          {"q", walk.q},          {"walk_length", walk.walk_length},
                    {"walks_per_node", walk.walks_per_node},        {"window", sgns.window},
                    {"negatives", sgns.negatives},                  {"epochs", sgns.epochs},
                    {"learning_rate", sgns.learning_rate},          {"seed", n2v_seed},
                    {"directed", n2v_directed}};
      io::write_embedding_tsv(n2v_out, graph, result.embedding, stage_fingerprint(stage));
      std::size_t unvisited = 0;
      for (auto flag : result.visited)
        if (!flag) ++unvisited;
      if (unvisited > 0)
        std::cerr << "warning: " << unvisited
                  << " isolated node(s) kept their initialization embedding\n";
      std::cout << "wrote " << n2v_out << " (" << graph.num_nodes() << " x " << n2v_dim << ")\n";
      return kExitOk;
    }

    if (*sage_cmd) {
      auto graph = kg::load_graph_json(sage_graph);
      auto n2v_emb = io::read_embedding_tsv(sage_n2v, graph);
      auto cent = io::read_centrality_csv(sage_cent, graph);
      const auto mode = direction_from_flag(sage_directed);
      const auto adj = kg::build_adjacency(graph, mode);
      auto split = eval::make_split(graph, sage_split.spec(sage_seed));
      std::vector<std::uint32_t> mask;
      if (!sage_paper_faithful) mask = split.test;
      auto features = sage::assemble_features(graph, n2v_emb.values, cent, mask);
      sage::SageConfig cfg = sage_cfg;
      cfg.seed = stage_seed(sage_seed, "sage");
      auto result =
          sage::train_sage(features, adj, split.train, graph.labels(), graph.num_classes(), cfg);
      json stage = {{"stage", "embed-sage"},
                    {"graph", sage_graph},
                    {"dim", cfg.dim},
                    {"layers", cfg.num_layers},
                    {"epochs", cfg.epochs},
                    {"learning_rate", cfg.learning_rate},
                    {"neighbor_sample", cfg.neighbor_sample},
                    {"paper_faithful", sage_paper_faithful},
                    {"seed", sage_seed},
                    {"split", sage_split.to_json()},
                    {"directed", sage_directed}};
      io::write_embedding_tsv(sage_out, graph, result.embedding, stage_fingerprint(stage));
      std::cout << "wrote " << sage_out << " (final loss "
                << format_double(result.epoch_loss.back()) << ")\n";
      return kExitOk;
    }

    if (*fuse_cmd) {
      auto graph = kg::load_graph_json(fuse_graph);
      auto n2v_emb = io::read_embedding_tsv(fuse_n2v, graph);
      auto sage_emb = io::read_embedding_tsv(fuse_sage, graph);
      auto split = eval::make_split(graph, fuse_split.spec(fuse_seed));
      EmbeddingMatrix fused;
      if (fuse_mode == "gated") {
        fusion::FusionHyper hyper = fuse_gated;
        hyper.epochs = fuse_fn.epochs;
        if (fuse_lr_opt->count() > 0) hyper.learning_rate = fuse_fn.learning_rate;
        hyper.seed = stage_seed(fuse_seed, "fusion");
        auto result = fusion::train_gated(n2v_emb.values, sage_emb.values, split.train,
                                          graph.labels(), graph.num_classes(), hyper);
        fused = std::move(result.fused);
      } else {
        fusion::FusionNetConfig cfg = fuse_fn;
        cfg.seed = stage_seed(fuse_seed, "fusion");
        auto result = fusion::fusionnet_train(n2v_emb.values, sage_emb.values, split.train,
                                              graph.labels(), graph.num_classes(), cfg);
        fused = std::move(result.enhanced);
      }
      json stage = {{"stage", "fuse"},          {"graph", fuse_graph},
                    {"fusion", fuse_mode},      {"hidden", fuse_fn.hidden},
                    {"out_dim", fuse_fn.out_dim}, {"epochs", fuse_fn.epochs},
                    {"learning_rate", fuse_fn.learning_rate}, {"seed", fuse_seed},
                    {"split", fuse_split.to_json()}};
      io::write_embedding_tsv(fuse_out, graph, fused, stage_fingerprint(stage));
      std::cout << "wrote " << fuse_out << "\n";
      return kExitOk;
    }

    if (*classify_cmd) {
      auto graph = kg::load_graph_json(cls_graph);
      auto emb = io::read_embedding_tsv(cls_emb, graph);
      auto split = eval::make_split(graph, cls_split.spec(cls_seed));

      std::vector<int> compact(graph.num_classes(), -1);
      std::vector<std::string> class_names;
      for (std::uint32_t cls : split.retained_classes) {
        compact[cls] = static_cast<int>(class_names.size());
        class_names.push_back(graph.class_name(cls));
      }
      auto gather = [&](const std::vector<std::uint32_t>& nodes, Matrix& X,
                        std::vector<int>& y) {
        X = Matrix(nodes.size(), emb.values.cols);
        y.resize(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          std::copy(emb.values.row(nodes[i]).begin(), emb.values.row(nodes[i]).end(),
                    X.row(i).begin());
          y[i] = compact[static_cast<std::size_t>(graph.label(nodes[i]))];
        }
      };
      Matrix x_train, x_test;
      std::vector<int> y_train, y_test;
      gather(split.train, x_train, y_train);
      gather(split.test, x_test, y_test);

      auto tree = eval::fit_tree(x_train, y_train, class_names.size(), cls_tree);
      auto preds = eval::tree_predict(tree, x_test);
      auto report = eval::evaluate(preds, y_test, class_names);
      report.method = cls_method.empty() ? method_for_role(emb.role) : cls_method;
      report.train_size = split.train.size();
      json stage = {{"stage", "classify"},
                    {"graph", cls_graph},
                    {"embeddings", cls_emb},
                    {"max_depth", cls_tree.max_depth},
                    {"min_samples_leaf", cls_tree.min_samples_leaf},
                    {"seed", cls_seed},
                    {"split", cls_split.to_json()}};
      report.config_json = stage.dump();
      report.config_fingerprint = stage_fingerprint(stage);
      io::write_text_file(cls_out, eval::report_to_json(report));
      if (!cls_confusion.empty())
        io::write_confusion_csv(cls_confusion, report, report.config_fingerprint);
      if (!cls_pca.empty()) {
        auto pca = eval::pca2(emb.values);
        io::write_pca_csv(cls_pca, graph, pca.projection, report.config_fingerprint);
      }
      std::cout << "accuracy " << format_double(report.accuracy) << ", macro-F1 "
                << format_double(report.macro_f1) << " -> " << cls_out << "\n";
      return kExitOk;
    }

    if (*report_cmd) {
      std::vector<eval::EvalReport> reports;
      for (const auto& path : report_inputs)
        reports.push_back(eval::report_from_json(io::read_text_file(path)));
      const std::string csv = eval::comparison_csv(reports);
      const std::string txt = eval::comparison_text(reports);
      if (!report_csv.empty()) io::write_text_file(report_csv, csv);
      if (!report_txt.empty()) io::write_text_file(report_txt, txt);
      std::cout << txt;
      return kExitOk;
    }

    if (*run_cmd) {
      pipeline::RunConfig config;
      if (!run_config_path.empty())
        config = pipeline::RunConfig::from_json(io::read_text_file(run_config_path));
      if (run_synthetic) config.use_synthetic = true;
      if (run_seed_set) config.seed = run_seed;
      if (run_paper_faithful) config.paper_faithful = true;
      if (!run_fusion.empty()) config.fusion_mode = run_fusion;
      if (run_threads > 0) config.threads = run_threads;

      auto result = pipeline::run_pipeline(config, run_out_dir);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "config fingerprint " << config.fingerprint() << "\n";
      std::cout << eval::comparison_text({result.node2vec, result.graphsage, result.biview});
      if (run_strict && !result.warnings.empty()) return kExitStrictWarning;
      return kExitOk;
    }

    if (*verify_cmd) {
      auto result = pipeline::verify_artifacts(verify_dir);
      for (const auto& m : result.messages)
        (result.ok ? std::cout : std::cerr) << m << "\n";
      return result.ok ? kExitOk : kExitInputError;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitOk;
}
