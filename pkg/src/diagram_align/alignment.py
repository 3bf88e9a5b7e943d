"""Node matching and the node/path precision, recall and F1 metrics."""
from __future__ import annotations

import unicodedata
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any

from .graph import DiagramGraph, induced_reachable_pairs, node_index, reachable_pairs

METRIC_NAMES = (
    "node_precision",
    "node_recall",
    "node_f1",
    "path_precision",
    "path_recall",
    "path_f1",
)


class PathMode(str, Enum):
    FULL_GRAPH = "full_graph"
    INDUCED = "induced"


@dataclass(frozen=True)
class MatchConfig:
    similarity_threshold: float = 0.80
    path_mode: PathMode = PathMode.FULL_GRAPH

    def __post_init__(self) -> None:
        if not 0.0 <= self.similarity_threshold <= 1.0:
            raise ValueError("similarity_threshold must lie in [0, 1]")
        object.__setattr__(self, "path_mode", PathMode(self.path_mode))


@dataclass(frozen=True)
class MatchedPair:
    gen_id: str
    ref_id: str
    similarity: float


@dataclass(frozen=True)
class NodeMatching:
    pairs: tuple[MatchedPair, ...] = ()

    def __post_init__(self) -> None:
        gens = [p.gen_id for p in self.pairs]
        refs = [p.ref_id for p in self.pairs]
        if len(set(gens)) != len(gens) or len(set(refs)) != len(refs):
            raise ValueError("node matching must be one-to-one")

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def gen_to_ref(self) -> dict[str, str]:
        return {p.gen_id: p.ref_id for p in self.pairs}


@dataclass(frozen=True)
class NodeMetrics:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class PathMetrics:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    degenerate: bool


@dataclass(frozen=True)
class AlignmentReport:
    node: NodeMetrics
    path: PathMetrics
    matching: NodeMatching
    unmatched_gen: tuple[str, ...] = ()
    unmatched_ref: tuple[str, ...] = ()
    path_mode: PathMode = PathMode.FULL_GRAPH
    # path metrics under the other reachability mode, for comparison
    alternate_path: PathMetrics | None = field(default=None)

    @property
    def modes_disagree(self) -> bool:
        return self.alternate_path is not None and self.alternate_path != self.path

    def metric_vector(self) -> tuple[float, float, float, float, float, float]:
        n, p = self.node, self.path
        return (n.precision, n.recall, n.f1, p.precision, p.recall, p.f1)

    def metrics(self) -> dict[str, float]:
        return dict(zip(METRIC_NAMES, self.metric_vector()))

    def to_dict(self) -> dict[str, Any]:
        return {
            "node": asdict(self.node),
            "path": asdict(self.path),
            "matching": {"pairs": [asdict(p) for p in self.matching.pairs]},
            "unmatched_gen": list(self.unmatched_gen),
            "unmatched_ref": list(self.unmatched_ref),
            "path_mode": self.path_mode.value,
            "alternate_path": asdict(self.alternate_path) if self.alternate_path else None,
            "modes_disagree": self.modes_disagree,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "AlignmentReport":
        alt = doc.get("alternate_path")
        return cls(
            node=NodeMetrics(**doc["node"]),
            path=PathMetrics(**doc["path"]),
            matching=NodeMatching(tuple(MatchedPair(**p) for p in doc["matching"]["pairs"])),
            unmatched_gen=tuple(doc["unmatched_gen"]),
            unmatched_ref=tuple(doc["unmatched_ref"]),
            path_mode=PathMode(doc.get("path_mode", PathMode.FULL_GRAPH.value)),
            alternate_path=PathMetrics(**alt) if alt else None,
        )


# --- similarity ------------------------------------------------------------

def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def normalize_text(text: str) -> str:
    """Case-fold, collapse whitespace, and strip leading/trailing punctuation."""
    s = " ".join(text.casefold().split())
    start, end = 0, len(s)
    while start < end and (_is_punct(s[start]) or s[start].isspace()):
        start += 1
    while end > start and (_is_punct(s[end - 1]) or s[end - 1].isspace()):
        end -= 1
    return s[start:end]


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        row = [i]
        for j, cb in enumerate(b, 1):
            row.append(min(row[-1] + 1, prev[j] + 1, prev[j - 1] + (ca != cb)))
        prev = row
    return prev[-1]


def text_similarity(a: str, b: str) -> float:
    """``1 - edit_distance / max_length`` over normalized forms, in [0, 1]."""
    na, nb = normalize_text(a), normalize_text(b)
    if na == nb:
        return 1.0
    return 1.0 - levenshtein(na, nb) / max(len(na), len(nb))


# --- matching and metrics ----------------------------------------------------

def match_nodes(gen: DiagramGraph, ref: DiagramGraph, config: MatchConfig | None = None) -> NodeMatching:
    """Greedy one-to-one matching by descending similarity.

    Pairs below the threshold are never matched; ties are broken by
    (gen id, ref id) in numeric id order.
    """
    config = config or MatchConfig()
    ref_norm = [(r.id, normalize_text(r.text)) for r in ref.nodes]
    candidates = []
    for g in gen.nodes:
        g_norm = normalize_text(g.text)
        for rid, r_norm in ref_norm:
            if g_norm == r_norm:
                sim = 1.0
            else:
                sim = 1.0 - levenshtein(g_norm, r_norm) / max(len(g_norm), len(r_norm))
            if sim >= config.similarity_threshold:
                candidates.append((-sim, node_index(g.id), node_index(rid), g.id, rid, sim))
    candidates.sort()

    used_gen: set[str] = set()
    used_ref: set[str] = set()
    pairs = []
    for _, _, _, gid, rid, sim in candidates:
        if gid in used_gen or rid in used_ref:
            continue
        used_gen.add(gid)
        used_ref.add(rid)
        pairs.append(MatchedPair(gid, rid, sim))
    return NodeMatching(tuple(pairs))


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    # same value as 2PR/(P+R), but a single division, so it is correctly rounded
    f1 = 2 * tp / (2 * tp + fp + fn) if tp > 0 else 0.0
    return precision, recall, f1


def node_alignment(gen: DiagramGraph, ref: DiagramGraph, matching: NodeMatching) -> NodeMetrics:
    tp = len(matching)
    fp = len(gen) - tp
    fn = len(ref) - tp
    if len(gen) == 0 and len(ref) == 0:
        # nothing compared to nothing is perfect agreement
        return NodeMetrics(0, 0, 0, 1.0, 1.0, 1.0)
    return NodeMetrics(tp, fp, fn, *_prf(tp, fp, fn))


def path_pair_sets(
    gen: DiagramGraph,
    ref: DiagramGraph,
    matching: NodeMatching,
    mode: PathMode = PathMode.FULL_GRAPH,
) -> tuple[set[tuple[str, str]], set[tuple[str, str]]]:
    """Return (P_gen, P_ref), both expressed in generated-graph node ids."""
    reach = reachable_pairs if PathMode(mode) is PathMode.FULL_GRAPH else induced_reachable_pairs
    g2r = matching.gen_to_ref
    r2g = {r: g for g, r in g2r.items()}
    p_gen = reach(gen, g2r.keys())
    p_ref = {(r2g[u], r2g[v]) for u, v in reach(ref, r2g.keys())}
    return p_gen, p_ref


def path_alignment(
    gen: DiagramGraph,
    ref: DiagramGraph,
    matching: NodeMatching,
    config: MatchConfig | None = None,
) -> PathMetrics:
    config = config or MatchConfig()
    if len(matching) < 2:
        return PathMetrics(0, 0, 0, 0.0, 0.0, 0.0, degenerate=True)
    p_gen, p_ref = path_pair_sets(gen, ref, matching, config.path_mode)
    tp = len(p_gen & p_ref)
    fp = len(p_gen - p_ref)
    fn = len(p_ref - p_gen)
    if not p_gen and not p_ref:
        # neither graph connects any matched pair: full agreement
        return PathMetrics(0, 0, 0, 1.0, 1.0, 1.0, degenerate=False)
    return PathMetrics(tp, fp, fn, *_prf(tp, fp, fn), degenerate=False)


def evaluate_pair(gen: DiagramGraph, ref: DiagramGraph, config: MatchConfig | None = None) -> AlignmentReport:
    config = config or MatchConfig()
    matching = match_nodes(gen, ref, config)
    g2r = matching.gen_to_ref
    matched_ref = set(g2r.values())
    other = PathMode.INDUCED if config.path_mode is PathMode.FULL_GRAPH else PathMode.FULL_GRAPH
    return AlignmentReport(
        node=node_alignment(gen, ref, matching),
        path=path_alignment(gen, ref, matching, config),
        matching=matching,
        unmatched_gen=tuple(n.id for n in gen.nodes if n.id not in g2r),
        unmatched_ref=tuple(n.id for n in ref.nodes if n.id not in matched_ref),
        path_mode=config.path_mode,
        alternate_path=path_alignment(gen, ref, matching, MatchConfig(config.similarity_threshold, other)),
    )
