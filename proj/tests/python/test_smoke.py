"""Smoke tests for the biview python module and the CLI binary."""

import json
import os
import subprocess

import pytest

biview = pytest.importorskip("biview")


def test_build_graph_by_hand():
    g = biview.KnowledgeGraph()
    a = g.add_node("a")
    b = g.add_node("b")
    rel = g.add_relation("knows")
    g.add_edge(a, rel, b, 2.0)
    cls = g.add_class("X")
    g.set_label(a, cls)
    g.validate()
    assert g.num_nodes == 2
    assert g.num_edges == 1
    assert g.labels() == [0, -1]


def test_ingest_csv(tmp_path):
    edges = tmp_path / "edges.csv"
    labels = tmp_path / "labels.csv"
    edges.write_text("src,rel,dst,weight\na,r,b,1.5\nb,r,c,\n")
    labels.write_text("node,class\na,X\nc,Y\n")
    g = biview.ingest(str(edges), str(labels))
    assert g.num_nodes == 3
    assert g.num_classes == 2
    assert biview.class_counts(g) == {0: 1, 1: 1}


def test_ingest_error_carries_line_number(tmp_path):
    edges = tmp_path / "edges.csv"
    edges.write_text("src,rel,dst\noops\n")
    with pytest.raises(biview.BiviewError, match="edges.csv:2"):
        biview.ingest(str(edges), "")


def test_synthetic_graph_is_deterministic():
    g1 = biview.synthetic_graph(blocks=2, block_size=20, p_in=0.3, p_out=0.02, seed=9)
    g2 = biview.synthetic_graph(blocks=2, block_size=20, p_in=0.3, p_out=0.02, seed=9)
    assert g1.num_nodes == 40
    assert g1.num_edges == g2.num_edges
    assert g1.labels() == g2.labels()


def test_centrality_vector_shape_and_pagerank_mass():
    g = biview.synthetic_graph(blocks=2, block_size=15, p_in=0.4, p_out=0.05, seed=3)
    gamma = biview.centrality_vector(g, minmax_normalize=False)
    assert gamma.shape == (30, 3)
    assert abs(gamma[:, 1].sum() - 1.0) < 1e-6  # pagerank column is a distribution
    normalized = biview.centrality_vector(g)
    assert normalized.min() >= 0.0
    assert normalized.max() <= 1.0


def test_transition_probs_triangle():
    g = biview.KnowledgeGraph()
    for name in "abc":
        g.add_node(name)
    rel = g.add_relation("r")
    g.add_edge(0, rel, 1)
    g.add_edge(1, rel, 2)
    g.add_edge(2, rel, 0)
    probs = dict(biview.transition_probs(g, t=0, v=1, p=2.0, q=1.0))
    assert probs[0] == pytest.approx(1.0 / 3.0)
    assert probs[2] == pytest.approx(2.0 / 3.0)


def test_node2vec_shape_and_determinism():
    g = biview.synthetic_graph(blocks=2, block_size=15, p_in=0.4, p_out=0.05, seed=4)
    kwargs = dict(dim=16, walk_length=10, walks_per_node=3, window=3, epochs=2, seed=11)
    emb1 = biview.node2vec(g, **kwargs)
    emb2 = biview.node2vec(g, **kwargs)
    assert emb1.shape == (30, 16)
    assert (emb1 == emb2).all()


def test_pca2_on_a_line():
    import numpy as np

    pts = np.column_stack([np.arange(30.0), np.arange(30.0)])
    proj, ratios = biview.pca2(pts)
    assert proj.shape == (30, 2)
    assert ratios[0] == pytest.approx(1.0)


def test_run_pipeline(tmp_path):
    config = {
        "seed": 5,
        "input": {"synthetic": {"blocks": 2, "block_size": 30, "p_in": 0.3, "p_out": 0.02}},
        "n2v_dim": 8,
        "walk": {"walk_length": 10, "walks_per_node": 3},
        "sgns": {"window": 3, "epochs": 2},
        "sage": {"dim": 8, "epochs": 10},
        "fusionnet": {"hidden": 8, "out_dim": 4, "epochs": 15},
        "split": {"min_class_samples": 5},
    }
    out = biview.run(json.dumps(config), str(tmp_path / "run"))
    assert set(out) == {"node2vec", "graphsage", "biview"}
    for metrics in out.values():
        assert 0.0 <= metrics["accuracy"] <= 1.0
        assert 0.0 <= metrics["macro_f1"] <= 1.0
    assert (tmp_path / "run" / "comparison.csv").exists()
    report = json.loads((tmp_path / "run" / "report_biview.json").read_text())
    assert report["config_fingerprint"]


@pytest.mark.skipif("BIVIEW_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_stage_by_stage(tmp_path):
    """Each stage consumes and produces only files, so a run can be resumed."""
    cli = os.environ["BIVIEW_CLI"]

    def run(*args):
        return subprocess.run([cli, *args], check=True, capture_output=True, text=True)

    graph = str(tmp_path / "graph.json")
    run("synth", "--blocks", "2", "--block-size", "30", "--p-in", "0.3", "--p-out", "0.02",
        "--seed", "11", "--out", graph)
    centrality = str(tmp_path / "centrality.csv")
    run("centrality", "--graph", graph, "--out", centrality)
    n2v = str(tmp_path / "n2v.tsv")
    run("embed-n2v", "--graph", graph, "--dim", "8", "--walk-length", "10",
        "--walks-per-node", "3", "--window", "3", "--epochs", "2", "--seed", "11",
        "--out", n2v)
    sage = str(tmp_path / "sage.tsv")
    run("embed-sage", "--graph", graph, "--n2v", n2v, "--centrality", centrality,
        "--dim", "8", "--epochs", "10", "--seed", "11", "--min-class-samples", "5",
        "--out", sage)
    fused = str(tmp_path / "biview.tsv")
    run("fuse", "--graph", graph, "--n2v", n2v, "--sage", sage, "--hidden", "8",
        "--out-dim", "4", "--epochs", "15", "--seed", "11", "--min-class-samples", "5",
        "--out", fused)
    reports = []
    for name, emb in [("node2vec", n2v), ("graphsage", sage), ("biview", fused)]:
        report = str(tmp_path / f"report_{name}.json")
        run("classify", "--graph", graph, "--embeddings", emb, "--seed", "11",
            "--min-class-samples", "5", "--out", report)
        reports.append(report)
        assert json.loads(open(report).read())["method"] == name
    cmp_csv = str(tmp_path / "comparison.csv")
    out = run("report", "--inputs", *reports, "--out-csv", cmp_csv)
    assert "node2vec" in out.stdout and "biview" in out.stdout
    assert "macro_f1" in open(cmp_csv).read()


@pytest.mark.skipif("BIVIEW_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_end_to_end(tmp_path):
    cli = os.environ["BIVIEW_CLI"]
    graph = tmp_path / "graph.json"
    subprocess.run(
        [cli, "synth", "--blocks", "2", "--block-size", "25", "--p-in", "0.3",
         "--p-out", "0.02", "--seed", "3", "--out", str(graph)],
        check=True,
    )
    out_dir = tmp_path / "out"
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "seed": 7,
        "input": {"graph_json": str(graph)},
        "n2v_dim": 8,
        "walk": {"walk_length": 10, "walks_per_node": 3},
        "sgns": {"window": 3, "epochs": 2},
        "sage": {"dim": 8, "epochs": 10},
        "fusionnet": {"hidden": 8, "out_dim": 4, "epochs": 15},
        "split": {"min_class_samples": 5},
    }))
    run = subprocess.run(
        [cli, "run", "--config", str(config), "--out-dir", str(out_dir), "--threads", "1"],
        check=True, capture_output=True, text=True,
    )
    assert "biview" in run.stdout
    verify = subprocess.run(
        [cli, "verify", "--dir", str(out_dir)], check=True, capture_output=True, text=True
    )
    assert "all artifacts carry config fingerprint" in verify.stdout
