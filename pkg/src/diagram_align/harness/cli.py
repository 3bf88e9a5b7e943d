"""Command-line entry point: extract, eval, batch, stats, generate."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from ..alignment import METRIC_NAMES, AlignmentReport, MatchConfig, PathMode, evaluate_pair
from ..errors import BatchAbortedError, ConfigError, DiagramAlignError
from ..graph import Provenance, parse_graph
from ..model.backends import HTTPBackend, MockBackend, ModelClient, RecordingBackend
from ..model.protocol import generate_diagram
from .batch import run_batch
from .config import Settings, load_settings
from .corpus import load_corpus
from .pipeline import extract_graph_detailed, write_extraction
from .stats import correlation_matrix, histogram, read_external_csv, write_correlation_csv, write_histogram_csv

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BATCH_FAILED = 2
EXIT_IO = 3

log = logging.getLogger("diagram_align")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: error: {message}")


def _global_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=argparse.SUPPRESS, help="YAML/JSON settings file")
    parser.add_argument("--mock", default=argparse.SUPPRESS, metavar="DIR", help="replay recorded model replies from DIR")
    parser.add_argument("--record", default=argparse.SUPPRESS, metavar="DIR", help="record live model replies into DIR")
    parser.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    _global_flags(common)

    parser = _Parser(prog="diagram-align", description="Convert SVG diagrams to graphs and score them.")
    _global_flags(parser)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("extract", parents=[common], help="SVG -> graph JSON")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--provenance", choices=[v.value for v in Provenance], default=Provenance.GENERATED.value)

    p = sub.add_parser("eval", parents=[common], help="two graph JSONs -> report JSON")
    p.add_argument("--gen", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--out")
    p.add_argument("--path-mode", choices=[m.value for m in PathMode])
    p.add_argument("--threshold", type=float)

    p = sub.add_parser("batch", parents=[common], help="manifest -> summary JSON + per-item reports")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True, help="generator label in generated_svg_paths")
    p.add_argument("--out", required=True)
    p.add_argument("--parallelism", type=int)
    p.add_argument("--exclude-degenerate", action="store_true", default=None)

    p = sub.add_parser("stats", parents=[common], help="reports dir -> histogram and correlation CSVs")
    p.add_argument("--reports", required=True)
    p.add_argument("--external", help="CSV with item_id plus extra metric columns")
    p.add_argument("--out", required=True)

    p = sub.add_parser("generate", parents=[common], help="paper context + caption -> SVG")
    p.add_argument("--context", required=True, help="file holding the paper context")
    p.add_argument("--caption", required=True)
    p.add_argument("--layout-caption")
    p.add_argument("--out", required=True)
    return parser


def make_client(settings: Settings, mock: str | None, record: str | None) -> ModelClient:
    if mock is not None:
        if not Path(mock).is_dir():
            raise ConfigError(f"mock fixture directory {mock} does not exist")
        backend = MockBackend(mock)
    else:
        try:
            backend = HTTPBackend(settings.endpoint)
        except ValueError as exc:
            raise ConfigError(f"{exc}; pass --mock DIR or configure 'endpoint'") from None
        if record is not None:
            backend = RecordingBackend(backend, record)
    return ModelClient(
        backend,
        max_retries=settings.endpoint.max_retries,
        backoff_base=settings.backoff_base,
        diagram_type_name=settings.diagram_type_name,
        diagram_type=settings.diagram_type,
    )


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False)


def cmd_extract(args, settings: Settings) -> int:
    client = make_client(settings, args.mock, args.record)
    result = extract_graph_detailed(
        args.input,
        settings.extraction,
        client,
        Provenance(args.provenance),
        settings.renderer,
        settings.render_timeout,
    )
    write_extraction(result, args.out)
    print(f"{args.out}: {len(result.graph)} nodes, {len(result.graph.edges)} edges", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args, settings: Settings) -> int:
    gen = parse_graph(Path(args.gen).read_bytes())
    ref = parse_graph(Path(args.ref).read_bytes())
    match = settings.matching
    match = MatchConfig(
        args.threshold if args.threshold is not None else match.similarity_threshold,
        PathMode(args.path_mode) if args.path_mode else match.path_mode,
    )
    report = evaluate_pair(gen, ref, match)
    text = _dump(report.to_dict())
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def cmd_batch(args, settings: Settings) -> int:
    records, skipped = load_corpus(args.manifest)
    for s in skipped:
        print(f"skipped {s.item_id} (line {s.line}): {s.reason}", file=sys.stderr)
    client = make_client(settings, args.mock, args.record)
    summary = run_batch(
        records,
        args.model,
        settings,
        client,
        out_dir=args.out,
        skipped=skipped,
        parallelism=args.parallelism,
        exclude_degenerate=args.exclude_degenerate,
    )
    for f in summary.failures:
        print(f"failed {f.item_id} [{f.stage}]: {f.message}", file=sys.stderr)
    means = ", ".join(f"{k}={v:.4f}" for k, v in summary.means.items() if v is not None)
    print(f"{len(summary.per_item)} evaluated, {summary.failure_count} failed; {means}", file=sys.stderr)
    return EXIT_OK


def cmd_stats(args, settings: Settings) -> int:
    reports_dir = Path(args.reports)
    files = sorted(reports_dir.glob("*.json"))
    if not files:
        raise DiagramAlignError(f"no report files in {reports_dir}")
    item_ids = [f.stem for f in files]
    reports = [AlignmentReport.from_dict(json.loads(f.read_text(encoding="utf-8"))) for f in files]
    external = read_external_csv(args.external, item_ids) if args.external else None

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    columns = {name: [r.metrics()[name] for r in reports] for name in METRIC_NAMES}
    for name, values in (external or {}).items():
        columns[name] = values
    for name, values in columns.items():
        clipped = [v for v in values if 0.0 <= v <= 1.0]
        if len(clipped) != len(values):
            log.warning("column %s has values outside [0, 1]; they are left out of its histogram", name)
        write_histogram_csv(out / f"histogram_{name}.csv", histogram(clipped))
    corr = correlation_matrix(reports, external)
    write_correlation_csv(out / "correlation.csv", corr)
    if corr.zero_variance:
        print(f"zero-variance columns (correlation set to 0): {', '.join(corr.zero_variance)}", file=sys.stderr)
    return EXIT_OK


def cmd_generate(args, settings: Settings) -> int:
    context = Path(args.context).read_text(encoding="utf-8")
    client = make_client(settings, args.mock, args.record)
    svg = generate_diagram(context, args.caption, args.layout_caption, client)
    Path(args.out).write_bytes(svg)
    return EXIT_OK


COMMANDS = {
    "extract": cmd_extract,
    "eval": cmd_eval,
    "batch": cmd_batch,
    "stats": cmd_stats,
    "generate": cmd_generate,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    for name in ("config", "mock", "record"):
        if not hasattr(args, name):
            setattr(args, name, None)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        settings = load_settings(args.config)
        return COMMANDS[args.command](args, settings)
    except BatchAbortedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BATCH_FAILED
    except (DiagramAlignError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
