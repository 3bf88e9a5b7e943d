"""Read positioned text items from SVG and cluster them into draft nodes."""
from __future__ import annotations

import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import MalformedSVGError, NotSVGError
from .graph import DiagramGraph, Origin, Provenance, TextNode, make_node_id, normalize_whitespace, union_bbox

log = logging.getLogger(__name__)

# Fallback average glyph width as a fraction of the font size.
GLYPH_WIDTH_FACTOR = 0.6

# Subtrees that are never rendered directly.
HIDDEN_CONTAINERS = {"defs", "clipPath", "mask", "symbol", "marker", "pattern"}

FONT_SIZE_KEYWORDS = {
    "xx-small": 9.0,
    "x-small": 10.0,
    "small": 13.0,
    "medium": 16.0,
    "large": 18.0,
    "x-large": 24.0,
    "xx-large": 32.0,
}

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_LENGTH_RE = re.compile(rf"\s*({_NUMBER})\s*([a-zA-Z%]*)\s*")
_TRANSFORM_RE = re.compile(r"([a-zA-Z]+)\s*\(([^)]*)\)")
_SPLIT_RE = re.compile(r"[\s,]+")


@dataclass(frozen=True)
class ExtractionConfig:
    k_y: float = 1.5
    tau_overlap: float = 0.2
    default_font_size: float = 12.0

    def __post_init__(self) -> None:
        if not self.k_y > 0:
            raise ValueError("k_y must be > 0")
        if not 0 < self.tau_overlap <= 1:
            raise ValueError("tau_overlap must lie in (0, 1]")
        if not self.default_font_size > 0:
            raise ValueError("default_font_size must be > 0")


@dataclass(frozen=True)
class TextItem:
    """One rendered text span; ``x`` is the left edge, ``y`` the baseline."""

    x: float
    y: float
    span_width: float
    font_size: float
    content: str
    width_estimated: bool = False

    def __post_init__(self) -> None:
        if not self.content.strip():
            raise ValueError("text item content is empty")
        if self.span_width < 0:
            raise ValueError("span_width must be >= 0")
        if not self.font_size > 0:
            raise ValueError("font_size must be > 0")

    @property
    def x_end(self) -> float:
        return self.x + self.span_width

    @property
    def extent(self) -> tuple[float, float, float, float]:
        return (self.x, self.y - self.font_size, self.x_end, self.y)


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    message: str


class _Sink:
    def __init__(self, target: list[Diagnostic] | None) -> None:
        self.target = target

    def __call__(self, kind: str, message: str) -> None:
        log.debug("%s: %s", kind, message)
        if self.target is not None:
            self.target.append(Diagnostic(kind, message))


def _local(tag: object) -> str:
    if not isinstance(tag, str):
        return ""
    return tag.rsplit("}", 1)[-1]


def _style(elem: ET.Element) -> dict[str, str]:
    out = {}
    for decl in elem.get("style", "").split(";"):
        if ":" in decl:
            k, v = decl.split(":", 1)
            out[k.strip()] = v.strip()
    return out


def _prop(elem: ET.Element, name: str) -> str | None:
    # inline style wins over the presentation attribute
    value = _style(elem).get(name)
    if value is None:
        value = elem.get(name)
    return value.strip() if value is not None else None


def _length(value: str, font_size: float, report: _Sink) -> float | None:
    m = _LENGTH_RE.fullmatch(value)
    if m is None:
        return None
    number, unit = float(m.group(1)), m.group(2).lower()
    if unit in ("", "px"):
        return number
    if unit == "em":
        return number * font_size
    if unit == "ex":
        return number * font_size * 0.5
    if unit == "pt":
        return number * 4.0 / 3.0
    if unit == "pc":
        return number * 16.0
    if unit == "mm":
        return number * 96.0 / 25.4
    if unit == "cm":
        return number * 96.0 / 2.54
    if unit == "in":
        return number * 96.0
    report("unsupported_unit", f"length {value!r} uses unit {unit!r}; treated as user units")
    return number


def _first_length(value: str | None, font_size: float, report: _Sink) -> float | None:
    if value is None or not value.strip():
        return None
    first = _SPLIT_RE.split(value.strip())[0]
    return _length(first, font_size, report)


def _font_size(elem: ET.Element, inherited: float, report: _Sink) -> float:
    raw = _prop(elem, "font-size")
    if raw is None:
        return inherited
    if raw in FONT_SIZE_KEYWORDS:
        return FONT_SIZE_KEYWORDS[raw]
    if raw == "larger":
        return inherited * 1.2
    if raw == "smaller":
        return inherited / 1.2
    if raw.endswith("%"):
        try:
            return inherited * float(raw[:-1]) / 100.0
        except ValueError:
            pass
    size = _length(raw, inherited, report)
    if size is None or size <= 0:
        report("bad_font_size", f"unreadable font-size {raw!r}; inherited {inherited:g} kept")
        return inherited
    return size


def _translation(elem: ET.Element, report: _Sink) -> tuple[float, float]:
    raw = elem.get("transform")
    if not raw:
        return 0.0, 0.0
    tx = ty = 0.0
    for name, args in _TRANSFORM_RE.findall(raw):
        try:
            nums = [float(a) for a in _SPLIT_RE.split(args.strip()) if a]
        except ValueError:
            report("ignored_transform", f"unreadable transform {raw!r}")
            continue
        if name == "translate" and nums:
            tx += nums[0]
            ty += nums[1] if len(nums) > 1 else 0.0
        elif name == "matrix" and len(nums) == 6:
            tx += nums[4]
            ty += nums[5]
            if nums[:4] != [1.0, 0.0, 0.0, 1.0]:
                report("ignored_transform", f"linear part of {name}({args.strip()}) ignored")
        elif name == "rotate" and nums and nums[0] == 0:
            continue
        elif name == "scale" and nums and all(n == 1 for n in nums):
            continue
        else:
            report("ignored_transform", f"{name}({args.strip()}) ignored; untransformed coordinates used")
    return tx, ty


def _anchor(elem: ET.Element, inherited: str) -> str:
    value = _prop(elem, "text-anchor")
    return value if value in ("start", "middle", "end") else inherited


class _Run:
    __slots__ = ("x", "y", "font_size", "anchor", "parts", "text_length")

    def __init__(self, x: float, y: float, font_size: float, anchor: str, text_length: float | None):
        self.x = x
        self.y = y
        self.font_size = font_size
        self.anchor = anchor
        self.parts: list[str] = []
        self.text_length = text_length

    def pen_x(self) -> float:
        # anchor is resolved later; for chained spans the start position is enough
        width = self.text_length
        if width is None:
            width = GLYPH_WIDTH_FACTOR * self.font_size * len(normalize_whitespace("".join(self.parts)))
        return self.x + width


class _TextWalker:
    def __init__(self, report: _Sink) -> None:
        self.report = report
        self.runs: list[_Run] = []

    def start(self, elem: ET.Element, tx: float, ty: float, font_size: float, anchor: str) -> None:
        x = _first_length(elem.get("x"), font_size, self.report) or 0.0
        y = _first_length(elem.get("y"), font_size, self.report) or 0.0
        x += _first_length(elem.get("dx"), font_size, self.report) or 0.0
        y += _first_length(elem.get("dy"), font_size, self.report) or 0.0
        self._check_vertical(elem)
        run = self._new_run(elem, tx + x, ty + y, font_size, anchor)
        self._content(elem, run, tx, ty, font_size, anchor)

    def _check_vertical(self, elem: ET.Element) -> None:
        mode = _prop(elem, "writing-mode") or ""
        if mode.startswith(("tb", "vertical")) or elem.get("rotate"):
            self.report("vertical_text", "vertical or glyph-rotated text is clustered by its horizontal coordinates")

    def _new_run(self, elem, x, y, font_size, anchor) -> _Run:
        length = _first_length(elem.get("textLength"), font_size, self.report)
        run = _Run(x, y, font_size, anchor, length)
        self.runs.append(run)
        return run

    def _content(self, elem, run: _Run, tx, ty, font_size, anchor) -> _Run:
        if elem.text:
            run.parts.append(elem.text)
        for child in elem:
            name = _local(child.tag)
            if name in ("tspan", "a", "textPath"):
                run = self._span(child, run, tx, ty, font_size, anchor)
            if child.tail:
                run.parts.append(child.tail)
        return run

    def _span(self, elem, run: _Run, tx, ty, font_size, anchor) -> _Run:
        fs = _font_size(elem, font_size, self.report)
        anc = _anchor(elem, anchor)
        self._check_vertical(elem)
        x_abs = _first_length(elem.get("x"), fs, self.report)
        y_abs = _first_length(elem.get("y"), fs, self.report)
        dx = _first_length(elem.get("dx"), fs, self.report) or 0.0
        dy = _first_length(elem.get("dy"), fs, self.report) or 0.0
        positioned = x_abs is not None or y_abs is not None or dy != 0 or elem.get("textLength") is not None
        if positioned:
            x = tx + x_abs if x_abs is not None else run.pen_x()
            y = ty + y_abs if y_abs is not None else run.y
            run = self._new_run(elem, x + dx, y + dy, fs, anc)
        return self._content(elem, run, tx, ty, fs, anc)

    def items(self) -> list[TextItem]:
        out = []
        for run in self.runs:
            content = normalize_whitespace("".join(run.parts))
            if not content:
                continue
            if run.text_length is not None:
                width, estimated = max(run.text_length, 0.0), False
            else:
                width, estimated = GLYPH_WIDTH_FACTOR * run.font_size * len(content), True
                self.report("estimated_width", f"span width of {content!r} estimated as {width:g}")
            left = run.x
            if run.anchor == "middle":
                left -= width / 2.0
            elif run.anchor == "end":
                left -= width
            out.append(TextItem(left, run.y, width, run.font_size, content, estimated))
        return out


def _byte_offset(data: bytes, line: int, column: int) -> int:
    lines = data.split(b"\n")
    return sum(len(chunk) + 1 for chunk in lines[: max(line - 1, 0)]) + column


def parse_text_items(
    svg_bytes: bytes,
    config: ExtractionConfig | None = None,
    diagnostics: list[Diagnostic] | None = None,
) -> list[TextItem]:
    """Return one :class:`TextItem` per rendered text span in document order.

    Coordinates are resolved through ancestor translations. Diagnostics
    (estimated widths, ignored transforms, hidden text) are appended to
    ``diagnostics`` when a list is given and always logged at DEBUG level.
    """
    config = config or ExtractionConfig()
    report = _Sink(diagnostics)
    try:
        root = ET.fromstring(svg_bytes)
    except ET.ParseError as exc:
        line, column = exc.position
        raise MalformedSVGError(str(exc), _byte_offset(svg_bytes, line, column)) from None
    if _local(root.tag) != "svg":
        raise NotSVGError(f"root element is <{_local(root.tag)}>, not <svg>")

    items: list[TextItem] = []

    def walk(elem: ET.Element, tx: float, ty: float, font_size: float, anchor: str) -> None:
        name = _local(elem.tag)
        if name in HIDDEN_CONTAINERS:
            hidden = sum(1 for e in elem.iter() if _local(e.tag) == "text")
            if hidden:
                report("skipped_hidden", f"{hidden} text element(s) inside <{name}> skipped")
            return
        dx, dy = _translation(elem, report)
        tx, ty = tx + dx, ty + dy
        font_size = _font_size(elem, font_size, report)
        anchor = _anchor(elem, anchor)
        if name == "text":
            walker = _TextWalker(report)
            walker.start(elem, tx, ty, font_size, anchor)
            items.extend(walker.items())
            return
        for child in elem:
            walk(child, tx, ty, font_size, anchor)

    walk(root, 0.0, 0.0, config.default_font_size, "start")
    return items


# --- clustering ------------------------------------------------------------

class UnionFind:
    """Disjoint sets over ``range(n)`` with path halving and union by size."""

    def __init__(self, n: int) -> None:
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]

    def groups(self) -> list[list[int]]:
        out: dict[int, list[int]] = {}
        for i in range(len(self.parent)):
            out.setdefault(self.find(i), []).append(i)
        return list(out.values())


def x_overlap_ratio(a: TextItem, b: TextItem) -> float:
    """Horizontal overlap length divided by the shorter of the two spans."""
    lo = max(a.x, b.x)
    hi = min(a.x_end, b.x_end)
    shorter = min(a.span_width, b.span_width)
    if shorter <= 0:
        # a zero-width span counts as fully overlapping when it lies inside the other
        return 1.0 if lo <= hi else 0.0
    return max(0.0, hi - lo) / shorter


def items_linked(a: TextItem, b: TextItem, config: ExtractionConfig) -> bool:
    if abs(a.y - b.y) >= config.k_y * max(a.font_size, b.font_size):
        return False
    return x_overlap_ratio(a, b) > config.tau_overlap


def _item_key(item: TextItem) -> tuple:
    return (item.y, item.x, item.content, item.span_width, item.font_size)


def cluster_items(
    items: Sequence[TextItem] | Iterable[TextItem],
    config: ExtractionConfig | None = None,
    provenance: Provenance = Provenance.GENERATED,
    source_path: str = "",
) -> DiagramGraph:
    """Group linked items into nodes; the result has no edges.

    Node ids follow the (top, left) order of the cluster bounding boxes, so
    the output does not depend on the input order.
    """
    config = config or ExtractionConfig()
    items = list(items)
    uf = UnionFind(len(items))
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            if items_linked(items[i], items[j], config):
                uf.union(i, j)

    clusters = []
    for group in uf.groups():
        members = sorted((items[i] for i in group), key=_item_key)
        text = " ".join(m.content for m in members)
        bbox = members[0].extent
        for m in members[1:]:
            bbox = union_bbox(bbox, m.extent)
        clusters.append((bbox, text))
    clusters.sort(key=lambda c: (c[0][1], c[0][0], c[0][3], c[0][2], c[1]))

    nodes = tuple(
        TextNode(make_node_id(i), text, Origin.PARSED, bbox) for i, (bbox, text) in enumerate(clusters, 1)
    )
    return DiagramGraph(nodes, frozenset(), provenance, source_path)
