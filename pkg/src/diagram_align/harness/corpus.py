"""Corpus manifests: JSON Lines, one evaluation item per line."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from ..errors import ManifestError

ITEM_ID_RE = re.compile(r"[A-Za-z0-9][A-Za-z0-9._-]*")


@dataclass(frozen=True)
class CorpusRecord:
    item_id: str
    paper_context: str
    original_caption: str
    reference_svg_path: str
    generated_svg_paths: Mapping[str, str] = field(default_factory=dict)
    layout_caption: str | None = None


@dataclass(frozen=True)
class SkippedItem:
    item_id: str
    line: int
    reason: str


def _field(doc: dict, name: str, line: int, kind: type, optional: bool = False):
    if name not in doc or doc[name] is None:
        if optional:
            return None
        raise ManifestError(line, name, "missing required field")
    value = doc[name]
    if not isinstance(value, kind):
        raise ManifestError(line, name, f"expected {kind.__name__}")
    return value


def load_corpus(manifest_path: str | Path) -> tuple[list[CorpusRecord], list[SkippedItem]]:
    """Load and validate a manifest.

    Structural problems abort with :class:`ManifestError`; items whose SVG
    files are missing are returned in the skip list instead.
    Relative paths resolve against the manifest's directory.
    """
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    records: list[CorpusRecord] = []
    skipped: list[SkippedItem] = []
    seen: set[str] = set()
    with manifest_path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(line_no, None, f"invalid JSON: {exc.msg}") from None
            if not isinstance(doc, dict):
                raise ManifestError(line_no, None, "record must be a JSON object")
            item_id = _field(doc, "item_id", line_no, str)
            if not ITEM_ID_RE.fullmatch(item_id):
                raise ManifestError(line_no, "item_id", f"{item_id!r} is not a safe identifier")
            if item_id in seen:
                raise ManifestError(line_no, "item_id", f"duplicate item id {item_id!r}")
            seen.add(item_id)
            generated = _field(doc, "generated_svg_paths", line_no, dict, optional=True) or {}
            for label, path in generated.items():
                if not isinstance(path, str):
                    raise ManifestError(line_no, "generated_svg_paths", f"path for {label!r} must be a string")
            record = CorpusRecord(
                item_id=item_id,
                paper_context=_field(doc, "paper_context", line_no, str),
                original_caption=_field(doc, "original_caption", line_no, str),
                layout_caption=_field(doc, "layout_caption", line_no, str, optional=True),
                reference_svg_path=str(base / _field(doc, "reference_svg_path", line_no, str)),
                generated_svg_paths={k: str(base / v) for k, v in sorted(generated.items())},
            )
            missing = [p for p in (record.reference_svg_path, *record.generated_svg_paths.values()) if not Path(p).is_file()]
            if missing:
                skipped.append(SkippedItem(item_id, line_no, f"missing file(s): {', '.join(missing)}"))
                continue
            records.append(record)
    return records, skipped
