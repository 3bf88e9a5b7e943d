"""Text-attributed directed graphs, reachability, and the graph JSON format."""
from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Iterable, Mapping

from .errors import (
    DanglingEdgeError,
    DuplicateNodeError,
    MalformedGraphError,
    UnknownNodeError,
)

NODE_ID_RE = re.compile(r"G_([1-9][0-9]*)")

BBox = tuple[float, float, float, float]


class Origin(str, Enum):
    PARSED = "parsed"
    MODEL_ADDED = "model_added"


class Provenance(str, Enum):
    REFERENCE = "reference"
    GENERATED = "generated"


def node_index(node_id: str) -> int:
    """Return the integer suffix of a ``G_<n>`` identifier."""
    m = NODE_ID_RE.fullmatch(node_id) if isinstance(node_id, str) else None
    if m is None:
        raise ValueError(f"invalid node id {node_id!r}; expected 'G_<positive integer>'")
    return int(m.group(1))


def make_node_id(index: int) -> str:
    if index < 1:
        raise ValueError("node index must be positive")
    return f"G_{index}"


def normalize_whitespace(text: str) -> str:
    return " ".join(text.split())


def union_bbox(a: BBox, b: BBox) -> BBox:
    return (min(a[0], b[0]), min(a[1], b[1]), max(a[2], b[2]), max(a[3], b[3]))


@dataclass(frozen=True)
class TextNode:
    id: str
    text: str
    origin: Origin = Origin.PARSED
    bbox: BBox | None = None

    def __post_init__(self) -> None:
        node_index(self.id)
        text = normalize_whitespace(self.text)
        if not text:
            raise ValueError(f"node {self.id} has empty text")
        object.__setattr__(self, "text", text)
        object.__setattr__(self, "origin", Origin(self.origin))
        if self.bbox is not None:
            bbox = tuple(float(v) for v in self.bbox)
            if len(bbox) != 4 or bbox[0] > bbox[2] or bbox[1] > bbox[3]:
                raise ValueError(f"node {self.id} has an invalid bbox {self.bbox!r}")
            object.__setattr__(self, "bbox", bbox)
        elif self.origin is Origin.PARSED:
            raise ValueError(f"parsed node {self.id} requires a bbox")


@dataclass(frozen=True, order=True)
class DirectedEdge:
    source: str
    target: str

    def __post_init__(self) -> None:
        node_index(self.source)
        node_index(self.target)
        if self.source == self.target:
            raise ValueError(f"self-loop on {self.source} is not a valid edge")


@dataclass(frozen=True)
class DiagramGraph:
    """Immutable directed graph over text nodes.

    Nodes are stored sorted by their numeric id so that two graphs with the
    same content compare equal regardless of construction order.
    """

    nodes: tuple[TextNode, ...] = ()
    edges: frozenset[DirectedEdge] = frozenset()
    provenance: Provenance = Provenance.GENERATED
    source_path: str = ""
    _by_id: dict[str, TextNode] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        by_id: dict[str, TextNode] = {}
        for node in self.nodes:
            if node.id in by_id:
                raise DuplicateNodeError(node.id)
            by_id[node.id] = node
        edges = frozenset(self.edges)
        for edge in edges:
            for end in (edge.source, edge.target):
                if end not in by_id:
                    raise DanglingEdgeError(end)
        ordered = tuple(sorted(by_id.values(), key=lambda n: node_index(n.id)))
        object.__setattr__(self, "nodes", ordered)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "provenance", Provenance(self.provenance))
        object.__setattr__(self, "_by_id", by_id)

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, node_id: object) -> bool:
        return node_id in self._by_id

    @property
    def node_ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    def node(self, node_id: str) -> TextNode:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise UnknownNodeError(node_id) from None

    @cached_property
    def successors(self) -> Mapping[str, tuple[str, ...]]:
        succ: dict[str, list[str]] = {nid: [] for nid in self._by_id}
        for edge in self.edges:
            succ[edge.source].append(edge.target)
        return {k: tuple(sorted(v, key=node_index)) for k, v in succ.items()}

    def sorted_edges(self) -> list[DirectedEdge]:
        return sorted(self.edges, key=lambda e: (node_index(e.source), node_index(e.target)))

    def next_index(self) -> int:
        return max((node_index(n.id) for n in self.nodes), default=0) + 1

    def replace(self, **changes: Any) -> "DiagramGraph":
        kwargs = dict(
            nodes=self.nodes,
            edges=self.edges,
            provenance=self.provenance,
            source_path=self.source_path,
        )
        kwargs.update(changes)
        return DiagramGraph(**kwargs)

    def with_edges(self, edges: Iterable[DirectedEdge]) -> "DiagramGraph":
        return self.replace(edges=frozenset(edges))


def edges_from_pairs(pairs: Iterable[tuple[str, str]]) -> frozenset[DirectedEdge]:
    """Build an edge set, dropping self-loops and collapsing duplicates."""
    return frozenset(DirectedEdge(s, t) for s, t in pairs if s != t)


def _check_endpoints(graph: DiagramGraph, endpoints: Iterable[str]) -> list[str]:
    ends = set(endpoints)
    for end in sorted(ends, key=str):
        if end not in graph:
            raise UnknownNodeError(end)
    return sorted(ends, key=node_index)


def _closure_from(sources: Iterable[str], succ: Mapping[str, Iterable[str]], targets: set[str]):
    pairs: set[tuple[str, str]] = set()
    for start in sources:
        seen = {start}
        queue = deque(succ.get(start, ()))
        while queue:
            cur = queue.popleft()
            if cur in seen:
                continue
            seen.add(cur)
            if cur in targets:
                pairs.add((start, cur))
            queue.extend(succ.get(cur, ()))
    return pairs


def reachable_pairs(graph: DiagramGraph, endpoints: Iterable[str]) -> set[tuple[str, str]]:
    """Ordered endpoint pairs ``(u, v)``, ``u != v``, with a directed path u -> v.

    Paths may pass through nodes outside ``endpoints``.
    """
    ends = _check_endpoints(graph, endpoints)
    return _closure_from(ends, graph.successors, set(ends))


def induced_reachable_pairs(graph: DiagramGraph, endpoints: Iterable[str]) -> set[tuple[str, str]]:
    """Like :func:`reachable_pairs` but walks only the subgraph induced by ``endpoints``."""
    ends = _check_endpoints(graph, endpoints)
    keep = set(ends)
    succ: dict[str, list[str]] = {e: [] for e in ends}
    for edge in graph.edges:
        if edge.source in keep and edge.target in keep:
            succ[edge.source].append(edge.target)
    return _closure_from(ends, succ, keep)


# --- JSON format -----------------------------------------------------------

def graph_to_dict(graph: DiagramGraph) -> dict[str, Any]:
    return {
        "provenance": graph.provenance.value,
        "source_path": graph.source_path,
        "nodes": [
            {
                "id": n.id,
                "text": n.text,
                "origin": n.origin.value,
                "bbox": list(n.bbox) if n.bbox is not None else None,
            }
            for n in graph.nodes
        ],
        "edges": [{"source": e.source, "target": e.target} for e in graph.sorted_edges()],
    }


def _require(obj: Mapping[str, Any], key: str, kind: type, where: str) -> Any:
    if key not in obj:
        raise MalformedGraphError(f"{where}: missing field {key!r}")
    value = obj[key]
    if not isinstance(value, kind):
        raise MalformedGraphError(f"{where}: field {key!r} must be {kind.__name__}")
    return value


def graph_from_dict(doc: Any) -> DiagramGraph:
    if not isinstance(doc, dict):
        raise MalformedGraphError("top level must be a JSON object")
    provenance = _require(doc, "provenance", str, "graph")
    if provenance not in {p.value for p in Provenance}:
        raise MalformedGraphError(f"graph: unknown provenance {provenance!r}")
    source_path = _require(doc, "source_path", str, "graph")
    raw_nodes = _require(doc, "nodes", list, "graph")
    raw_edges = _require(doc, "edges", list, "graph")

    nodes: list[TextNode] = []
    seen: set[str] = set()
    for i, raw in enumerate(raw_nodes):
        where = f"nodes[{i}]"
        if not isinstance(raw, dict):
            raise MalformedGraphError(f"{where}: must be an object")
        nid = _require(raw, "id", str, where)
        if nid in seen:
            raise DuplicateNodeError(nid)
        seen.add(nid)
        text = _require(raw, "text", str, where)
        origin = _require(raw, "origin", str, where)
        if "bbox" not in raw:
            raise MalformedGraphError(f"{where}: missing field 'bbox'")
        bbox = raw["bbox"]
        if bbox is not None:
            if not (
                isinstance(bbox, list)
                and len(bbox) == 4
                and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in bbox)
            ):
                raise MalformedGraphError(f"{where}: bbox must be null or 4 numbers")
            bbox = tuple(bbox)
        try:
            nodes.append(TextNode(nid, text, Origin(origin), bbox))
        except ValueError as exc:
            raise MalformedGraphError(f"{where}: {exc}") from None

    edges: list[DirectedEdge] = []
    for i, raw in enumerate(raw_edges):
        where = f"edges[{i}]"
        if not isinstance(raw, dict):
            raise MalformedGraphError(f"{where}: must be an object")
        src = _require(raw, "source", str, where)
        dst = _require(raw, "target", str, where)
        for end in (src, dst):
            if end not in seen:
                raise DanglingEdgeError(end)
        try:
            edges.append(DirectedEdge(src, dst))
        except ValueError as exc:
            raise MalformedGraphError(f"{where}: {exc}") from None

    return DiagramGraph(tuple(nodes), frozenset(edges), Provenance(provenance), source_path)


def serialize_graph(graph: DiagramGraph) -> bytes:
    return (json.dumps(graph_to_dict(graph), indent=2, ensure_ascii=False, allow_nan=False) + "\n").encode(
        "utf-8"
    )


def parse_graph(data: bytes | str) -> DiagramGraph:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedGraphError(f"not UTF-8: {exc}") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedGraphError(f"invalid JSON: {exc}") from None
    return graph_from_dict(doc)
