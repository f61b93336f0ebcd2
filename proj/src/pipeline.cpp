#include "biview/pipeline.hpp"

#include <algorithm>
#include <filesystem>

#include "json.hpp"

#include "biview/io.hpp"
#include "biview/rng.hpp"
#include "biview/util.hpp"

namespace biview::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

kg::KnowledgeGraph generate_synthetic(const SyntheticSpec& spec) {
  if (spec.blocks == 0 || spec.block_size == 0)
    throw Error("synthetic: blocks and block_size must be positive");
  for (double p : {spec.p_in, spec.p_out, spec.noise_fraction})
    if (p < 0.0 || p > 1.0) throw Error("synthetic: probabilities must be in [0,1]");

  const std::size_t n = spec.blocks * spec.block_size;
  kg::KnowledgeGraph graph;
  for (std::size_t v = 0; v < n; ++v) graph.add_node("n" + std::to_string(v));
  const std::uint32_t rel = graph.add_relation("rel");
  for (std::size_t b = 0; b < spec.blocks; ++b) graph.add_class("block" + std::to_string(b));
  for (std::size_t v = 0; v < n; ++v)
    graph.set_label(static_cast<std::uint32_t>(v),
                    static_cast<std::uint32_t>(v / spec.block_size));

  Rng rng(splitmix64(spec.seed ^ fnv1a64("sbm")));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool same = i / spec.block_size == j / spec.block_size;
      if (rng.uniform() >= (same ? spec.p_in : spec.p_out)) continue;
      std::uint32_t dst = static_cast<std::uint32_t>(j);
      if (spec.noise_fraction > 0.0 && rng.uniform() < spec.noise_fraction) {
        dst = static_cast<std::uint32_t>(rng.below(n));
        if (dst == i) dst = static_cast<std::uint32_t>((i + 1) % n);
      }
      graph.add_edge(static_cast<std::uint32_t>(i), rel, dst, 1.0);
    }
  }
  return graph;
}

namespace {

json synthetic_to_json(const SyntheticSpec& s) {
  return {{"blocks", s.blocks},     {"block_size", s.block_size},
          {"p_in", s.p_in},         {"p_out", s.p_out},
          {"noise_fraction", s.noise_fraction}};
}

SyntheticSpec synthetic_from_json(const json& j, SyntheticSpec base) {
  if (j.contains("blocks")) base.blocks = j["blocks"].get<std::size_t>();
  if (j.contains("block_size")) base.block_size = j["block_size"].get<std::size_t>();
  if (j.contains("p_in")) base.p_in = j["p_in"].get<double>();
  if (j.contains("p_out")) base.p_out = j["p_out"].get<double>();
  if (j.contains("noise_fraction")) base.noise_fraction = j["noise_fraction"].get<double>();
  return base;
}

}  // namespace

std::string RunConfig::canonical_json() const {
  json j;
  j["format"] = 1;
  j["seed"] = seed;
  j["threads"] = threads;
  j["direction"] = kg::direction_name(direction);
  j["paper_faithful"] = paper_faithful;
  j["fusion_mode"] = fusion_mode;
  json input;
  if (use_synthetic)
    input["synthetic"] = synthetic_to_json(synthetic);
  else if (!graph_json.empty())
    input["graph_json"] = graph_json;
  else {
    input["edges_csv"] = edges_csv;
    input["labels_csv"] = labels_csv;
  }
  j["input"] = std::move(input);
  j["n2v_dim"] = n2v_dim;
  j["walk"] = {{"p", walk.p},
               {"q", walk.q},
               {"walk_length", walk.walk_length},
               {"walks_per_node", walk.walks_per_node}};
  j["sgns"] = {{"window", sgns.window},
               {"negatives", sgns.negatives},
               {"epochs", sgns.epochs},
               {"learning_rate", sgns.learning_rate},
               {"lr_floor", sgns.lr_floor}};
  j["centrality"] = {{"damping", centrality.pagerank.damping},
                     {"tol", centrality.pagerank.tol},
                     {"max_iter", centrality.pagerank.max_iter},
                     {"betweenness_normalized", centrality.betweenness_normalized},
                     {"minmax_normalize", centrality.minmax_normalize}};
  j["sage"] = {{"num_layers", sage.num_layers},
               {"dim", sage.dim},
               {"epochs", sage.epochs},
               {"learning_rate", sage.learning_rate},
               {"neighbor_sample", sage.neighbor_sample}};
  j["fusionnet"] = {{"hidden", fusionnet.hidden},
                    {"out_dim", fusionnet.out_dim},
                    {"epochs", fusionnet.epochs},
                    {"learning_rate", fusionnet.learning_rate}};
  j["gated"] = {{"epochs", gated.epochs}, {"learning_rate", gated.learning_rate}};
  j["split"] = {{"train_fraction", split.train_fraction},
                {"stratified", split.stratified},
                {"min_class_samples", split.min_class_samples}};
  j["tree"] = {{"max_depth", tree.max_depth}, {"min_samples_leaf", tree.min_samples_leaf}};
  return j.dump();
}

std::string RunConfig::fingerprint() const { return to_hex(fnv1a64(canonical_json())); }

RunConfig RunConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("config JSON: ") + e.what());
  }
  RunConfig cfg;
  if (j.contains("format") && j["format"].get<int>() != 1)
    throw Error("config JSON: unsupported format version");
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
  if (j.contains("direction")) {
    const auto d = j["direction"].get<std::string>();
    if (d == "directed")
      cfg.direction = kg::DirectionMode::directed;
    else if (d == "undirected")
      cfg.direction = kg::DirectionMode::undirected_collapsed;
    else
      throw Error("config JSON: direction must be 'directed' or 'undirected'");
  }
  if (j.contains("paper_faithful")) cfg.paper_faithful = j["paper_faithful"].get<bool>();
  if (j.contains("fusion_mode")) {
    cfg.fusion_mode = j["fusion_mode"].get<std::string>();
    if (cfg.fusion_mode != "fusionnet" && cfg.fusion_mode != "gated")
      throw Error("config JSON: fusion_mode must be 'fusionnet' or 'gated'");
  }
  if (j.contains("input")) {
    const auto& input = j["input"];
    if (input.contains("synthetic")) {
      cfg.use_synthetic = true;
      cfg.synthetic = synthetic_from_json(input["synthetic"], cfg.synthetic);
    }
    if (input.contains("graph_json")) cfg.graph_json = input["graph_json"].get<std::string>();
    if (input.contains("edges_csv")) cfg.edges_csv = input["edges_csv"].get<std::string>();
    if (input.contains("labels_csv")) cfg.labels_csv = input["labels_csv"].get<std::string>();
  }
  if (j.contains("n2v_dim")) cfg.n2v_dim = j["n2v_dim"].get<int>();
  if (j.contains("walk")) {
    const auto& w = j["walk"];
    if (w.contains("p")) cfg.walk.p = w["p"].get<double>();
    if (w.contains("q")) cfg.walk.q = w["q"].get<double>();
    if (w.contains("walk_length")) cfg.walk.walk_length = w["walk_length"].get<int>();
    if (w.contains("walks_per_node")) cfg.walk.walks_per_node = w["walks_per_node"].get<int>();
  }
  if (j.contains("sgns")) {
    const auto& s = j["sgns"];
    if (s.contains("window")) cfg.sgns.window = s["window"].get<int>();
    if (s.contains("negatives")) cfg.sgns.negatives = s["negatives"].get<int>();
    if (s.contains("epochs")) cfg.sgns.epochs = s["epochs"].get<int>();
    if (s.contains("learning_rate")) cfg.sgns.learning_rate = s["learning_rate"].get<double>();
    if (s.contains("lr_floor")) cfg.sgns.lr_floor = s["lr_floor"].get<double>();
  }
  if (j.contains("centrality")) {
    const auto& c = j["centrality"];
    if (c.contains("damping")) cfg.centrality.pagerank.damping = c["damping"].get<double>();
    if (c.contains("tol")) cfg.centrality.pagerank.tol = c["tol"].get<double>();
    if (c.contains("max_iter")) cfg.centrality.pagerank.max_iter = c["max_iter"].get<int>();
    if (c.contains("betweenness_normalized"))
      cfg.centrality.betweenness_normalized = c["betweenness_normalized"].get<bool>();
    if (c.contains("minmax_normalize"))
      cfg.centrality.minmax_normalize = c["minmax_normalize"].get<bool>();
  }
  if (j.contains("sage")) {
    const auto& s = j["sage"];
    if (s.contains("num_layers")) cfg.sage.num_layers = s["num_layers"].get<int>();
    if (s.contains("dim")) cfg.sage.dim = s["dim"].get<int>();
    if (s.contains("epochs")) cfg.sage.epochs = s["epochs"].get<int>();
    if (s.contains("learning_rate")) cfg.sage.learning_rate = s["learning_rate"].get<double>();
    if (s.contains("neighbor_sample")) cfg.sage.neighbor_sample = s["neighbor_sample"].get<int>();
  }
  if (j.contains("fusionnet")) {
    const auto& f = j["fusionnet"];
    if (f.contains("hidden")) cfg.fusionnet.hidden = f["hidden"].get<int>();
    if (f.contains("out_dim")) cfg.fusionnet.out_dim = f["out_dim"].get<int>();
    if (f.contains("epochs")) cfg.fusionnet.epochs = f["epochs"].get<int>();
    if (f.contains("learning_rate")) cfg.fusionnet.learning_rate = f["learning_rate"].get<double>();
  }
  if (j.contains("gated")) {
    const auto& g = j["gated"];
    if (g.contains("epochs")) cfg.gated.epochs = g["epochs"].get<int>();
    if (g.contains("learning_rate")) cfg.gated.learning_rate = g["learning_rate"].get<double>();
  }
  if (j.contains("split")) {
    const auto& s = j["split"];
    if (s.contains("train_fraction")) cfg.split.train_fraction = s["train_fraction"].get<double>();
    if (s.contains("stratified")) cfg.split.stratified = s["stratified"].get<bool>();
    if (s.contains("min_class_samples"))
      cfg.split.min_class_samples = s["min_class_samples"].get<std::size_t>();
  }
  if (j.contains("tree")) {
    const auto& t = j["tree"];
    if (t.contains("max_depth")) cfg.tree.max_depth = t["max_depth"].get<int>();
    if (t.contains("min_samples_leaf"))
      cfg.tree.min_samples_leaf = t["min_samples_leaf"].get<std::size_t>();
  }
  return cfg;
}

namespace {

kg::KnowledgeGraph resolve_graph(const RunConfig& cfg) {
  if (cfg.use_synthetic) {
    SyntheticSpec spec = cfg.synthetic;
    spec.seed = stage_seed(cfg.seed, "synth");
    return generate_synthetic(spec);
  }
  if (!cfg.graph_json.empty()) return kg::load_graph_json(cfg.graph_json);
  if (!cfg.edges_csv.empty() || !cfg.labels_csv.empty())
    return kg::ingest(cfg.edges_csv, cfg.labels_csv);
  throw Error("run: config specifies no input graph");
}

Matrix gather_rows(const Matrix& m, const std::vector<std::uint32_t>& rows) {
  Matrix out(rows.size(), m.cols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(m.row(rows[i]).begin(), m.row(rows[i]).end(), out.row(i).begin());
  return out;
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& config, const std::string& out_dir) {
  PipelineResult result;
  const std::string fingerprint = config.fingerprint();
  const std::string config_json = config.canonical_json();

  fs::create_directories(out_dir);
  auto out_path = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };
  auto note_file = [&](const std::string& path) { result.written_files.push_back(path); };

  // Stage: input graph.
  kg::KnowledgeGraph graph = resolve_graph(config);
  kg::save_graph_json(graph, out_path("graph.json"));
  note_file(out_path("graph.json"));
  const auto adj = kg::build_adjacency(graph, config.direction);

  // Stage: centrality.
  auto cent = centrality::centrality_vector(graph, config.centrality, config.direction);
  if (!cent.pagerank_converged)
    result.warnings.push_back("pagerank did not converge within max_iter");
  io::write_centrality_csv(out_path("centrality.csv"), graph, cent.values, fingerprint);
  note_file(out_path("centrality.csv"));

  // Stage: Node2Vec view.
  n2v::WalkConfig walk_cfg = config.walk;
  walk_cfg.seed = stage_seed(config.seed, "walks");
  n2v::SgnsConfig sgns_cfg = config.sgns;
  sgns_cfg.seed = stage_seed(config.seed, "sgns");
  sgns_cfg.threads = config.threads;
  auto n2v_result =
      n2v::node2vec(graph, walk_cfg, sgns_cfg, config.n2v_dim, config.direction, config.threads);
  io::write_embedding_tsv(out_path("embeddings_n2v.tsv"), graph, n2v_result.embedding,
                          fingerprint);
  note_file(out_path("embeddings_n2v.tsv"));
  std::size_t unvisited = 0;
  for (auto flag : n2v_result.visited)
    if (!flag) ++unvisited;
  if (unvisited > 0)
    result.warnings.push_back(std::to_string(unvisited) +
                              " isolated node(s) kept their initialization embedding");

  // Stage: split (shared across all arms).
  eval::SplitSpec split_spec = config.split;
  split_spec.seed = stage_seed(config.seed, "split");
  const auto split = eval::make_split(graph, split_spec);

  // Stage: enriched features and GraphSAGE view. Test labels are masked out
  // of the feature block unless the run is paper-faithful.
  std::vector<std::uint32_t> mask;
  if (!config.paper_faithful) mask = split.test;
  const auto features =
      sage::assemble_features(graph, n2v_result.embedding.values, cent.values, mask);
  sage::SageConfig sage_cfg = config.sage;
  sage_cfg.seed = stage_seed(config.seed, "sage");
  auto sage_result = sage::train_sage(features, adj, split.train, graph.labels(),
                                      graph.num_classes(), sage_cfg);
  io::write_embedding_tsv(out_path("embeddings_sage.tsv"), graph, sage_result.embedding,
                          fingerprint);
  note_file(out_path("embeddings_sage.tsv"));

  // Stage: fusion view.
  EmbeddingMatrix fused;
  if (config.fusion_mode == "gated") {
    fusion::FusionHyper hyper = config.gated;
    hyper.seed = stage_seed(config.seed, "fusion");
    auto gated = fusion::train_gated(n2v_result.embedding.values, sage_result.embedding.values,
                                     split.train, graph.labels(), graph.num_classes(), hyper);
    fused = std::move(gated.fused);
  } else {
    fusion::FusionNetConfig fn_cfg = config.fusionnet;
    fn_cfg.seed = stage_seed(config.seed, "fusion");
    auto fn = fusion::fusionnet_train(n2v_result.embedding.values, sage_result.embedding.values,
                                      split.train, graph.labels(), graph.num_classes(), fn_cfg);
    fused = std::move(fn.enhanced);
  }
  io::write_embedding_tsv(out_path("embeddings_biview.tsv"), graph, fused, fingerprint);
  note_file(out_path("embeddings_biview.tsv"));

  // Stage: per-arm decision tree + evaluation on the shared split.
  std::vector<int> compact_class(graph.num_classes(), -1);
  std::vector<std::string> class_names;
  for (std::uint32_t cls : split.retained_classes) {
    compact_class[cls] = static_cast<int>(class_names.size());
    class_names.push_back(graph.class_name(cls));
  }
  std::vector<int> y_train, y_test;
  for (std::uint32_t v : split.train)
    y_train.push_back(compact_class[static_cast<std::size_t>(graph.label(v))]);
  for (std::uint32_t v : split.test)
    y_test.push_back(compact_class[static_cast<std::size_t>(graph.label(v))]);

  auto run_arm = [&](const std::string& method, const Matrix& embedding) {
    auto tree = eval::fit_tree(gather_rows(embedding, split.train), y_train, class_names.size(),
                               config.tree);
    auto preds = eval::tree_predict(tree, gather_rows(embedding, split.test));
    auto report = eval::evaluate(preds, y_test, class_names);
    report.method = method;
    report.train_size = split.train.size();
    report.config_fingerprint = fingerprint;
    report.config_json = config_json;
    io::write_text_file(out_path("report_" + method + ".json"), eval::report_to_json(report));
    note_file(out_path("report_" + method + ".json"));
    io::write_confusion_csv(out_path("confusion_" + method + ".csv"), report, fingerprint);
    note_file(out_path("confusion_" + method + ".csv"));
    auto pca = eval::pca2(embedding);
    io::write_pca_csv(out_path("pca_" + method + ".csv"), graph, pca.projection, fingerprint);
    note_file(out_path("pca_" + method + ".csv"));
    return report;
  };

  result.node2vec = run_arm("node2vec", n2v_result.embedding.values);
  result.graphsage = run_arm("graphsage", sage_result.embedding.values);
  result.biview = run_arm("biview", fused.values);

  const std::vector<eval::EvalReport> reports{result.node2vec, result.graphsage, result.biview};
  io::write_text_file(out_path("comparison.csv"),
                      "# config_fingerprint=" + fingerprint + "\n" +
                          eval::comparison_csv(reports));
  note_file(out_path("comparison.csv"));
  io::write_text_file(out_path("comparison.txt"), eval::comparison_text(reports));
  note_file(out_path("comparison.txt"));
  return result;
}

VerifyResult verify_artifacts(const std::string& dir) {
  VerifyResult result;
  if (!fs::is_directory(dir)) throw Error("verify: not a directory: " + dir);

  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());

  // Reports anchor the expected fingerprint: their embedded config must hash
  // to their embedded fingerprint.
  std::string expected;
  for (const auto& path : files) {
    if (path.ends_with(".json") && fs::path(path).filename().string().starts_with("report_")) {
      auto report = eval::report_from_json(io::read_text_file(path));
      const std::string recomputed = to_hex(fnv1a64(report.config_json));
      if (report.config_json.empty() || recomputed != report.config_fingerprint) {
        result.ok = false;
        result.messages.push_back(path + ": embedded config does not hash to its fingerprint");
        continue;
      }
      if (expected.empty()) expected = report.config_fingerprint;
      if (report.config_fingerprint != expected) {
        result.ok = false;
        result.messages.push_back(path + ": fingerprint differs from other reports");
      }
    }
  }
  if (expected.empty()) {
    result.ok = false;
    result.messages.push_back(dir + ": no report_*.json artifact to anchor verification");
    return result;
  }

  for (const auto& path : files) {
    const std::string name = fs::path(path).filename().string();
    if (name == "graph.json" || name == "comparison.txt" || name.starts_with("report_")) continue;
    const std::string fp = io::artifact_fingerprint(path);
    if (fp.empty()) {
      result.ok = false;
      result.messages.push_back(path + ": no embedded fingerprint");
    } else if (fp != expected) {
      result.ok = false;
      result.messages.push_back(path + ": fingerprint mismatch");
    }
  }
  if (result.ok)
    result.messages.push_back("all artifacts carry config fingerprint " + expected);
  return result;
}

}  // namespace biview::pipeline
