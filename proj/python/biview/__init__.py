"""Bi-View knowledge-graph embedding pipeline (C++ core)."""

from ._core import (
    BiviewError,
    KnowledgeGraph,
    centrality_vector,
    class_counts,
    ingest,
    load_graph,
    node2vec,
    pca2,
    run,
    save_graph,
    synthetic_graph,
    transition_probs,
)

__all__ = [
    "BiviewError",
    "KnowledgeGraph",
    "centrality_vector",
    "class_counts",
    "ingest",
    "load_graph",
    "node2vec",
    "pca2",
    "run",
    "save_graph",
    "synthetic_graph",
    "transition_probs",
]
