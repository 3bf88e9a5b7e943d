"""Histograms and Pearson correlation maps over per-item metrics."""
from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from ..alignment import METRIC_NAMES, AlignmentReport
from ..errors import StatsError

HISTOGRAM_BINS = 20


@dataclass(frozen=True)
class HistogramBin:
    lower: float
    upper: float
    count: int


@dataclass(frozen=True)
class CorrelationResult:
    names: tuple[str, ...]
    matrix: tuple[tuple[float, ...], ...]
    zero_variance: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "matrix": [list(row) for row in self.matrix],
            "zero_variance": list(self.zero_variance),
        }


def histogram(values: Sequence[float], bins: int = HISTOGRAM_BINS) -> list[HistogramBin]:
    """Counts over ``bins`` equal-width bins on [0, 1]; 1.0 falls in the last bin."""
    counts = [0] * bins
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"value {v!r} outside [0, 1]")
        counts[min(int(v * bins), bins - 1)] += 1
    return [HistogramBin(i / bins, (i + 1) / bins, c) for i, c in enumerate(counts)]


def _columns(
    rows: Sequence[AlignmentReport | Mapping[str, float]],
    external: Mapping[str, Sequence[float]] | None,
) -> dict[str, list[float]]:
    cols: dict[str, list[float]] = {name: [] for name in METRIC_NAMES}
    for row in rows:
        values = row.metrics() if isinstance(row, AlignmentReport) else row
        for name in METRIC_NAMES:
            cols[name].append(float(values[name]))
    for name, values in (external or {}).items():
        if name in cols:
            raise StatsError(f"external column {name!r} clashes with a metric name")
        if len(values) != len(rows):
            raise StatsError(f"external column {name!r} has {len(values)} values for {len(rows)} rows")
        cols[name] = [float(v) for v in values]
    return cols


def correlation_matrix(
    rows: Sequence[AlignmentReport | Mapping[str, float]],
    external: Mapping[str, Sequence[float]] | None = None,
) -> CorrelationResult:
    """Pearson correlation between every pair of metric columns.

    Columns with zero variance correlate 0 with everything else (listed in
    ``zero_variance``); the diagonal is always 1.
    """
    if len(rows) < 2:
        raise StatsError("correlation needs at least 2 rows")
    cols = _columns(rows, external)
    names = tuple(cols)
    for name, values in cols.items():
        if not all(math.isfinite(v) for v in values):
            raise StatsError(f"column {name!r} contains non-finite values")
    flat = {n for n in names if max(cols[n]) == min(cols[n])}

    k = len(names)
    matrix = [[0.0] * k for _ in range(k)]
    for i in range(k):
        matrix[i][i] = 1.0
        for j in range(i + 1, k):
            if names[i] in flat or names[j] in flat:
                r = 0.0
            else:
                r = max(-1.0, min(1.0, statistics.correlation(cols[names[i]], cols[names[j]])))
            matrix[i][j] = matrix[j][i] = r
    return CorrelationResult(names, tuple(tuple(row) for row in matrix), tuple(n for n in names if n in flat))


def write_histogram_csv(path: str | Path, bins: Sequence[HistogramBin]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_lower", "bin_upper", "count"])
        for b in bins:
            w.writerow([repr(b.lower), repr(b.upper), b.count])


def write_correlation_csv(path: str | Path, result: CorrelationResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", *result.names])
        for name, row in zip(result.names, result.matrix):
            w.writerow([name, *(repr(v) for v in row)])


def read_external_csv(path: str | Path, item_ids: Sequence[str]) -> dict[str, list[float]]:
    """Load extra metric columns keyed by an ``item_id`` column, aligned to ``item_ids``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "item_id" not in reader.fieldnames:
            raise StatsError(f"{path}: needs an 'item_id' column")
        by_id = {row["item_id"]: row for row in reader}
    names = [c for c in reader.fieldnames if c != "item_id"]
    missing = [i for i in item_ids if i not in by_id]
    if missing:
        raise StatsError(f"{path}: no row for item(s) {', '.join(missing)}")
    cols: dict[str, list[float]] = {}
    for name in names:
        try:
            cols[name] = [float(by_id[i][name]) for i in item_ids]
        except (TypeError, ValueError):
            raise StatsError(f"{path}: column {name!r} has a non-numeric value") from None
    return cols
