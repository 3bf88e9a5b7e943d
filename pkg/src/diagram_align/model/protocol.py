"""Model-assisted node refinement, edge extraction, captioning and generation."""
from __future__ import annotations

import json
import re
import warnings
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Any

from ..errors import DeltaValidationError, GenerationError
from ..graph import (
    DiagramGraph,
    DirectedEdge,
    Origin,
    TextNode,
    make_node_id,
    normalize_whitespace,
    union_bbox,
)
from .backends import ModelClient, ReplyParseError
from .prompts import (
    DEFAULT_DIAGRAM_TYPE,
    DEFAULT_DIAGRAM_TYPE_NAME,
    ImagePart,
    edge_prompt,
    generation_prompt,
    layout_caption_prompt,
    refinement_prompt,
)

REFINE_SIGNAL = "FINAL ANSWER:"
EDGE_SIGNAL = "Final Answer JSON:"

_FENCE_RE = re.compile(r"```[A-Za-z0-9_-]*[ \t]*\n?(.*?)(?:```|\Z)", re.S)


class GeneratedSVGWarning(UserWarning):
    """A generated SVG block is not well-formed XML."""


@dataclass(frozen=True)
class Merge:
    keep_id: str
    remove_id: str


@dataclass(frozen=True)
class RefinementDelta:
    merges: tuple[Merge, ...] = ()
    adds: tuple[str, ...] = ()
    removes: tuple[str, ...] = ()

    def is_empty(self) -> bool:
        return not (self.merges or self.adds or self.removes)

    def to_dict(self) -> dict[str, Any]:
        return {
            "merges": [{"keep_id": m.keep_id, "remove_id": m.remove_id} for m in self.merges],
            "adds": [{"text": t} for t in self.adds],
            "removes": [{"id": r} for r in self.removes],
        }

    @classmethod
    def from_dict(cls, doc: Any) -> "RefinementDelta":
        """Decode the refinement JSON object; structural problems raise ReplyParseError."""
        if not isinstance(doc, dict):
            raise ReplyParseError("refinement answer must be a JSON object")

        def entries(key: str) -> list:
            value = doc.get(key)
            if value is None:
                return []
            if not isinstance(value, list):
                raise ReplyParseError(f"{key!r} must be a list")
            for entry in value:
                if not isinstance(entry, dict):
                    raise ReplyParseError(f"entries of {key!r} must be objects")
            return value

        def string(entry: dict, field: str, key: str) -> str:
            value = entry.get(field)
            if not isinstance(value, str) or not value.strip():
                raise ReplyParseError(f"{key!r} entry needs a non-empty string {field!r}")
            return value.strip()

        merges = tuple(Merge(string(e, "keep_id", "merges"), string(e, "remove_id", "merges")) for e in entries("merges"))
        adds = tuple(normalize_whitespace(string(e, "text", "adds")) for e in entries("adds"))
        removes = tuple(string(e, "id", "removes") for e in entries("removes"))
        return cls(merges, adds, removes)


# --- reply parsing -----------------------------------------------------------

def after_last_signal(reply: str, signal: str) -> str:
    """Text following the last occurrence of ``signal`` (case-insensitive)."""
    pos = reply.lower().rfind(signal.lower())
    if pos < 0:
        raise ReplyParseError(f"signal {signal!r} not found in reply")
    return reply[pos + len(signal):]


def decode_json_payload(text: str, expect: type) -> Any:
    """Decode the first JSON value of type ``expect`` in ``text``, unwrapping code fences."""
    fenced = _FENCE_RE.search(text)
    if fenced and not text[: fenced.start()].strip():
        text = fenced.group(1)
    opener = "{" if expect is dict else "["
    start = text.find(opener)
    if start < 0:
        raise ReplyParseError(f"no JSON {expect.__name__} after the signal")
    try:
        value, _ = json.JSONDecoder().raw_decode(text, start)
    except json.JSONDecodeError as exc:
        raise ReplyParseError(f"undecodable JSON: {exc}") from None
    if not isinstance(value, expect):
        raise ReplyParseError(f"expected a JSON {expect.__name__}")
    return value


# --- refinement -----------------------------------------------------------------

def validate_delta(draft: DiagramGraph, delta: RefinementDelta) -> None:
    """Check that ``delta`` can be applied to ``draft`` in full."""
    alive = set(draft.node_ids)
    for m in delta.merges:
        if m.keep_id == m.remove_id:
            raise DeltaValidationError(f"merge keeps and removes the same id {m.keep_id!r}")
        for nid in (m.keep_id, m.remove_id):
            if nid not in draft:
                raise DeltaValidationError(f"merge references unknown id {nid!r}")
            if nid not in alive:
                raise DeltaValidationError(f"merge references {nid!r}, already consumed by an earlier merge")
        alive.discard(m.remove_id)
    for nid in delta.removes:
        if nid not in draft:
            raise DeltaValidationError(f"remove references unknown id {nid!r}")
        if nid not in alive:
            raise DeltaValidationError(f"remove references {nid!r}, already merged or removed")
        alive.discard(nid)
    for text in delta.adds:
        if not normalize_whitespace(text):
            raise DeltaValidationError("added node has empty text")


def apply_refinement(draft: DiagramGraph, delta: RefinementDelta) -> DiagramGraph:
    """Return a new graph with merges, then removals, then additions applied.

    Validation happens before anything is changed, so a bad delta leaves no
    partial result.
    """
    validate_delta(draft, delta)
    nodes: dict[str, TextNode] = {n.id: n for n in draft.nodes}
    for m in delta.merges:
        keep, gone = nodes[m.keep_id], nodes.pop(m.remove_id)
        if keep.bbox is None or gone.bbox is None:
            bbox = keep.bbox or gone.bbox
        else:
            bbox = union_bbox(keep.bbox, gone.bbox)
        nodes[m.keep_id] = TextNode(keep.id, f"{keep.text} {gone.text}", keep.origin, bbox)
    for nid in delta.removes:
        del nodes[nid]
    next_index = draft.next_index()
    for offset, text in enumerate(delta.adds):
        nid = make_node_id(next_index + offset)
        nodes[nid] = TextNode(nid, text, Origin.MODEL_ADDED, None)
    edges = frozenset(e for e in draft.edges if e.source in nodes and e.target in nodes)
    return draft.replace(nodes=tuple(nodes.values()), edges=edges)


def parse_refinement_reply(reply: str, draft: DiagramGraph) -> RefinementDelta:
    payload = decode_json_payload(after_last_signal(reply, REFINE_SIGNAL), dict)
    delta = RefinementDelta.from_dict(payload)
    try:
        validate_delta(draft, delta)
    except DeltaValidationError as exc:
        raise ReplyParseError(str(exc)) from None
    return delta


def refine_nodes(image: ImagePart, draft: DiagramGraph, client: ModelClient) -> RefinementDelta:
    prompt = refinement_prompt(image, draft, client.diagram_type_name or DEFAULT_DIAGRAM_TYPE_NAME)
    return client.call(prompt, lambda reply: parse_refinement_reply(reply, draft), what="node refinement")


# --- edges ----------------------------------------------------------------------

def parse_edge_reply(reply: str, nodes: DiagramGraph) -> frozenset[DirectedEdge]:
    payload = decode_json_payload(after_last_signal(reply, EDGE_SIGNAL), list)
    edges = set()
    for entry in payload:
        if not (isinstance(entry, list) and len(entry) == 2 and all(isinstance(v, str) for v in entry)):
            raise ReplyParseError(f"edge entry {entry!r} is not a pair of ids")
        src, dst = (v.strip() for v in entry)
        for nid in (src, dst):
            if nid not in nodes:
                raise ReplyParseError(f"edge references unknown id {nid!r}")
        if src != dst:
            edges.add(DirectedEdge(src, dst))
    return frozenset(edges)


def extract_edges(image: ImagePart, nodes: DiagramGraph, client: ModelClient) -> frozenset[DirectedEdge]:
    if len(nodes) == 0:
        raise ValueError("edge extraction needs at least one node")
    prompt = edge_prompt(image, nodes, client.diagram_type or DEFAULT_DIAGRAM_TYPE)
    return client.call(prompt, lambda reply: parse_edge_reply(reply, nodes), what="edge extraction")


# --- captioning and generation ------------------------------------------------------

def _nonempty(reply: str) -> str:
    if not reply.strip():
        raise ReplyParseError("empty reply")
    return reply


def generate_layout_caption(document: bytes, client: ModelClient, mime_type: str = "application/pdf") -> str:
    prompt = layout_caption_prompt(ImagePart(document, mime_type))
    return client.call(prompt, _nonempty, what="layout caption")


_SELF_CLOSING_SVG_RE = re.compile(r"<svg\b[^>]*/>")


def extract_svg_block(reply: str) -> str:
    """The span from the first ``<svg`` to the last ``</svg>`` (or a lone ``<svg .../>``)."""
    start = reply.find("<svg")
    end = reply.rfind("</svg>")
    if start >= 0 and end > start:
        return reply[start : end + len("</svg>")]
    lone = _SELF_CLOSING_SVG_RE.search(reply)
    if lone:
        return lone.group(0)
    raise ReplyParseError("no <svg ...> ... </svg> block in reply")


def generate_diagram(
    paper_context: str,
    caption: str,
    layout_caption: str | None,
    client: ModelClient,
) -> bytes:
    if not paper_context.strip():
        raise ValueError("paper_context must be non-empty")
    prompt = generation_prompt(paper_context, caption, layout_caption)
    svg = client.call(prompt, extract_svg_block, error_cls=GenerationError, what="diagram generation")
    data = svg.encode("utf-8")
    try:
        ET.fromstring(data)
    except ET.ParseError as exc:
        warnings.warn(f"generated SVG is not well-formed XML: {exc}", GeneratedSVGWarning, stacklevel=2)
    return data

