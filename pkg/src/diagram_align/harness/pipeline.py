"""SVG file to refined graph with edges: parse, cluster, render, refine, connect."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

from ..errors import ModelError, RenderError, SVGError, StageError
from ..graph import DiagramGraph, Provenance, serialize_graph
from ..model.backends import ModelClient
from ..model.prompts import ImagePart
from ..model.protocol import RefinementDelta, apply_refinement, extract_edges, refine_nodes
from ..model.render import DEFAULT_RENDERER, render_svg
from ..svg import Diagnostic, ExtractionConfig, cluster_items, parse_text_items


@dataclass(frozen=True)
class ExtractionResult:
    draft: DiagramGraph
    delta: RefinementDelta
    graph: DiagramGraph
    diagnostics: tuple[Diagnostic, ...] = ()


def extract_graph_detailed(
    svg_path: str | Path,
    config: ExtractionConfig,
    client: ModelClient,
    provenance: Provenance = Provenance.GENERATED,
    renderer: Sequence[str] = DEFAULT_RENDERER,
    render_timeout: float = 120.0,
) -> ExtractionResult:
    svg_path = Path(svg_path)
    try:
        data = svg_path.read_bytes()
    except OSError as exc:
        raise StageError("read", f"{svg_path}: {exc}") from None

    diagnostics: list[Diagnostic] = []
    try:
        items = parse_text_items(data, config, diagnostics)
    except SVGError as exc:
        raise StageError("parse", f"{svg_path}: {exc}") from None
    draft = cluster_items(items, config, provenance, str(svg_path))

    try:
        image = ImagePart(render_svg(svg_path, renderer, render_timeout), "image/png")
    except RenderError as exc:
        raise StageError("render", f"{svg_path}: {exc}") from None

    # refinement runs even on an empty draft: the model may add icon nodes
    try:
        delta = refine_nodes(image, draft, client)
    except ModelError as exc:
        raise StageError("refine", f"{svg_path}: {exc}") from None
    nodes = apply_refinement(draft, delta)

    if len(nodes) == 0:
        return ExtractionResult(draft, delta, nodes, tuple(diagnostics))
    try:
        edges = extract_edges(image, nodes, client)
    except ModelError as exc:
        raise StageError("edges", f"{svg_path}: {exc}") from None
    return ExtractionResult(draft, delta, nodes.with_edges(edges), tuple(diagnostics))


def extract_graph(
    svg_path: str | Path,
    config: ExtractionConfig,
    client: ModelClient,
    provenance: Provenance = Provenance.GENERATED,
    renderer: Sequence[str] = DEFAULT_RENDERER,
    render_timeout: float = 120.0,
) -> DiagramGraph:
    return extract_graph_detailed(svg_path, config, client, provenance, renderer, render_timeout).graph


def write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n", encoding="utf-8")


def write_extraction(result: ExtractionResult, graph_path: str | Path) -> dict[str, Path]:
    """Write the final graph plus draft, delta and diagnostics next to it."""
    graph_path = Path(graph_path)
    graph_path.parent.mkdir(parents=True, exist_ok=True)
    name = graph_path.name
    stem = name[: -len(".json")] if name.endswith(".json") else name
    paths = {
        "graph": graph_path,
        "draft": graph_path.with_name(f"{stem}.draft.json"),
        "delta": graph_path.with_name(f"{stem}.delta.json"),
        "diagnostics": graph_path.with_name(f"{stem}.diagnostics.json"),
    }
    paths["graph"].write_bytes(serialize_graph(result.graph))
    paths["draft"].write_bytes(serialize_graph(result.draft))
    write_json(paths["delta"], result.delta.to_dict())
    write_json(paths["diagnostics"], [asdict(d) for d in result.diagnostics])
    return paths
