"""Corpus-level evaluation with bounded parallelism and aggregate statistics."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from ..alignment import METRIC_NAMES, AlignmentReport, evaluate_pair
from ..errors import BatchAbortedError, DiagramAlignError, StageError
from ..graph import Provenance
from ..model.backends import ModelClient
from .config import Settings
from .corpus import CorpusRecord, SkippedItem
from .pipeline import extract_graph_detailed, write_extraction, write_json
from .stats import CorrelationResult, HistogramBin, correlation_matrix, histogram

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ItemFailure:
    item_id: str
    stage: str
    message: str


@dataclass(frozen=True)
class BatchSummary:
    model_label: str
    per_item: dict[str, AlignmentReport]
    means: dict[str, float | None]
    histograms: dict[str, list[HistogramBin]]
    correlation: CorrelationResult | None
    degenerate_count: int
    included_items: tuple[str, ...]
    failures: tuple[ItemFailure, ...] = ()
    skipped: tuple[SkippedItem, ...] = ()
    exclude_degenerate: bool = False
    pooled: dict[str, dict[str, float | int]] = field(default_factory=dict)

    @property
    def failure_count(self) -> int:
        return len(self.failures)

    def to_dict(self) -> dict:
        return {
            "model_label": self.model_label,
            "item_count": len(self.per_item),
            "included_items": list(self.included_items),
            "exclude_degenerate": self.exclude_degenerate,
            "degenerate_count": self.degenerate_count,
            "failure_count": self.failure_count,
            "means": dict(self.means),
            "pooled": self.pooled,
            "histograms": {
                name: [{"bin_lower": b.lower, "bin_upper": b.upper, "count": b.count} for b in bins]
                for name, bins in self.histograms.items()
            },
            "correlation": self.correlation.to_dict() if self.correlation else None,
            "failures": [asdict(f) for f in self.failures],
            "skipped": [asdict(s) for s in self.skipped],
            "per_item": {k: self.per_item[k].to_dict() for k in sorted(self.per_item)},
        }


def _prf(tp: int, fp: int, fn: int) -> dict[str, float | int]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
    return {"tp": tp, "fp": fp, "fn": fn, "precision": p, "recall": r, "f1": f1}


def summarize(
    model_label: str,
    per_item: dict[str, AlignmentReport],
    failures: Sequence[ItemFailure] = (),
    skipped: Sequence[SkippedItem] = (),
    exclude_degenerate: bool = False,
) -> BatchSummary:
    """Aggregate per-item reports; the result depends only on the inputs, not their order."""
    ids = sorted(per_item)
    degenerate = [i for i in ids if per_item[i].path.degenerate]
    included = [i for i in ids if not (exclude_degenerate and per_item[i].path.degenerate)]
    reports = [per_item[i] for i in included]

    columns = {name: [r.metrics()[name] for r in reports] for name in METRIC_NAMES}
    means = {name: (math.fsum(v) / len(v) if v else None) for name, v in columns.items()}
    histograms = {name: histogram(v) for name, v in columns.items()}
    correlation = correlation_matrix(reports) if len(reports) >= 2 else None

    pooled = {
        "node": _prf(*(sum(getattr(r.node, k) for r in reports) for k in ("tp", "fp", "fn"))),
        "path": _prf(*(sum(getattr(r.path, k) for r in reports) for k in ("tp", "fp", "fn"))),
    }
    return BatchSummary(
        model_label=model_label,
        per_item={i: per_item[i] for i in ids},
        means=means,
        histograms=histograms,
        correlation=correlation,
        degenerate_count=len(degenerate),
        included_items=tuple(included),
        failures=tuple(sorted(failures, key=lambda f: f.item_id)),
        skipped=tuple(sorted(skipped, key=lambda s: s.item_id)),
        exclude_degenerate=exclude_degenerate,
        pooled=pooled,
    )


def evaluate_record(
    record: CorpusRecord,
    model_label: str,
    settings: Settings,
    client: ModelClient,
    artifacts_dir: str | Path | None = None,
) -> AlignmentReport:
    """Extract both graphs for one item and compare them."""
    graphs = {}
    for role, path, provenance in (
        ("reference", record.reference_svg_path, Provenance.REFERENCE),
        ("generated", record.generated_svg_paths[model_label], Provenance.GENERATED),
    ):
        result = extract_graph_detailed(
            path, settings.extraction, client, provenance, settings.renderer, settings.render_timeout
        )
        if artifacts_dir is not None:
            write_extraction(result, Path(artifacts_dir) / record.item_id / f"{role}.graph.json")
        graphs[role] = result.graph
    return evaluate_pair(graphs["generated"], graphs["reference"], settings.matching)


def run_batch(
    corpus: Sequence[CorpusRecord],
    model_label: str,
    settings: Settings,
    client: ModelClient,
    out_dir: str | Path | None = None,
    skipped: Sequence[SkippedItem] = (),
    parallelism: int | None = None,
    exclude_degenerate: bool | None = None,
) -> BatchSummary:
    """Evaluate every record for ``model_label`` and aggregate the results.

    Item failures are recorded with their stage and left out of the
    aggregates. If the failure rate exceeds ``settings.failure_threshold``
    the batch raises :class:`BatchAbortedError`. With ``out_dir`` set, the
    per-item reports, extraction artifacts and ``summary.json`` are written
    there.
    """
    parallelism = parallelism or settings.parallelism
    if exclude_degenerate is None:
        exclude_degenerate = settings.exclude_degenerate
    skipped = list(skipped)
    eligible = []
    for record in corpus:
        if model_label in record.generated_svg_paths:
            eligible.append(record)
        else:
            skipped.append(SkippedItem(record.item_id, 0, f"no generated diagram for model {model_label!r}"))

    out = Path(out_dir) if out_dir is not None else None
    artifacts = out / "items" if out is not None else None

    def task(record: CorpusRecord) -> tuple[str, AlignmentReport | ItemFailure]:
        try:
            return record.item_id, evaluate_record(record, model_label, settings, client, artifacts)
        except StageError as exc:
            return record.item_id, ItemFailure(record.item_id, exc.stage, exc.message)
        except DiagramAlignError as exc:
            return record.item_id, ItemFailure(record.item_id, "evaluate", str(exc))

    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        outcomes = dict(pool.map(task, eligible))

    per_item = {k: v for k, v in outcomes.items() if isinstance(v, AlignmentReport)}
    failures = [v for v in outcomes.values() if isinstance(v, ItemFailure)]
    for f in failures:
        log.warning("item %s failed at stage %s: %s", f.item_id, f.stage, f.message)
    if eligible and len(failures) / len(eligible) > settings.failure_threshold:
        raise BatchAbortedError(len(failures), len(eligible), settings.failure_threshold)

    summary = summarize(model_label, per_item, failures, skipped, exclude_degenerate)
    if out is not None:
        reports_dir = out / "reports"
        reports_dir.mkdir(parents=True, exist_ok=True)
        for item_id, report in summary.per_item.items():
            write_json(reports_dir / f"{item_id}.json", report.to_dict())
        write_json(out / "summary.json", summary.to_dict())
    return summary
