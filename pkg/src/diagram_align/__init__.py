"""Turn SVG diagrams into text-attributed directed graphs and score a
generated diagram against a reference with node and path alignment
precision, recall and F1."""
from .alignment import (
    AlignmentReport,
    MatchConfig,
    NodeMatching,
    PathMode,
    evaluate_pair,
    match_nodes,
    node_alignment,
    path_alignment,
    text_similarity,
)
from .graph import (
    DiagramGraph,
    DirectedEdge,
    Origin,
    Provenance,
    TextNode,
    induced_reachable_pairs,
    parse_graph,
    reachable_pairs,
    serialize_graph,
)
from .svg import ExtractionConfig, TextItem, cluster_items, parse_text_items

__version__ = "0.1.0"
