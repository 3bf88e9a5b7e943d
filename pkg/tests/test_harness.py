import csv
import json
import math
import shutil

import pytest

from conftest import CORPUS, STUB_RENDERER, make_graph
from diagram_align.alignment import PathMode, evaluate_pair
from diagram_align.errors import BatchAbortedError, ConfigError, ManifestError, StageError, StatsError
from diagram_align.graph import Provenance, parse_graph, serialize_graph
from diagram_align.harness.batch import run_batch, summarize
from diagram_align.harness.cli import main
from diagram_align.harness.config import Settings, load_settings, settings_from_mapping
from diagram_align.harness.corpus import load_corpus
from diagram_align.harness.pipeline import extract_graph_detailed, write_extraction
from diagram_align.harness.stats import correlation_matrix, histogram, read_external_csv
from diagram_align.model.backends import MockBackend, ModelClient
from diagram_align.svg import ExtractionConfig

REPLIES = CORPUS / "replies"
SETTINGS = Settings(renderer=STUB_RENDERER)


def mock_client():
    return ModelClient(MockBackend(REPLIES), sleep=lambda s: None)


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(f"renderer: {json.dumps(list(STUB_RENDERER))}\nbackoff_base: 0\n", encoding="utf-8")
    return path


# --- config ------------------------------------------------------------------

def test_settings_from_mapping():
    s = settings_from_mapping(
        {"k_y": 2, "path_mode": "induced", "renderer": "render-it --fast", "endpoint": {"model_name": "m"}}
    )
    assert s.extraction.k_y == 2.0
    assert s.matching.path_mode is PathMode.INDUCED
    assert s.renderer == ("render-it", "--fast")
    assert s.endpoint.model_name == "m"


@pytest.mark.parametrize(
    "doc", [{"bogus": 1}, {"endpoint": {"api_key": "x"}}, {"tau_overlap": 0}, {"parallelism": 0}, {"path_mode": "x"}]
)
def test_bad_settings(doc):
    with pytest.raises(ConfigError):
        settings_from_mapping(doc)


def test_load_settings(tmp_path, config_file):
    assert load_settings(None) == Settings()
    assert load_settings(config_file).renderer == STUB_RENDERER
    with pytest.raises(ConfigError):
        load_settings(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("- a\n- b\n")
    with pytest.raises(ConfigError):
        load_settings(bad)


# --- corpus ----------------------------------------------------------------------

def test_load_corpus_resolves_paths():
    records, skipped = load_corpus(CORPUS / "manifest.jsonl")
    assert [r.item_id for r in records] == ["item1", "item2", "item3", "item4", "item5"]
    assert skipped == []
    assert records[0].reference_svg_path == str(CORPUS / "svg" / "item1_ref.svg")
    assert records[1].layout_caption is None


def write_manifest(path, *docs):
    path.write_text("\n".join(d if isinstance(d, str) else json.dumps(d) for d in docs) + "\n", encoding="utf-8")
    return path


BASE = {"item_id": "a", "paper_context": "c", "original_caption": "cap", "reference_svg_path": "ref.svg"}


def test_missing_files_are_skipped(tmp_path):
    (tmp_path / "ref.svg").write_text("<svg/>")
    m = write_manifest(
        tmp_path / "m.jsonl",
        {**BASE, "generated_svg_paths": {"x": "ref.svg"}},
        "",
        {**BASE, "item_id": "b", "generated_svg_paths": {"x": "gone.svg"}},
    )
    records, skipped = load_corpus(m)
    assert [r.item_id for r in records] == ["a"]
    assert [(s.item_id, s.line) for s in skipped] == [("b", 3)]


@pytest.mark.parametrize(
    "line, field",
    [
        ("{not json", None),
        ("[1]", None),
        (json.dumps({**BASE, "item_id": "../x"}), "item_id"),
        (json.dumps({k: v for k, v in BASE.items() if k != "paper_context"}), "paper_context"),
        (json.dumps({**BASE, "generated_svg_paths": {"x": 3}}), "generated_svg_paths"),
    ],
)
def test_manifest_errors(tmp_path, line, field):
    with pytest.raises(ManifestError) as info:
        load_corpus(write_manifest(tmp_path / "m.jsonl", line))
    assert info.value.line == 1 and info.value.field == field


def test_duplicate_item_ids(tmp_path):
    with pytest.raises(ManifestError) as info:
        load_corpus(write_manifest(tmp_path / "m.jsonl", BASE, BASE))
    assert info.value.line == 2


# --- pipeline -------------------------------------------------------------------

def test_extraction_of_item4_reference(tmp_path):
    result = extract_graph_detailed(
        CORPUS / "svg" / "item4_ref.svg", ExtractionConfig(), mock_client(), Provenance.REFERENCE, STUB_RENDERER
    )
    assert result.graph.node("G_1").text == "Hello World"
    assert result.graph.node("G_6").text == "LLM Model (OpenAI)"
    assert "G_5" in result.draft and "G_5" not in result.graph
    paths = write_extraction(result, tmp_path / "ref.graph.json")
    assert parse_graph(paths["graph"].read_bytes()) == result.graph
    assert parse_graph(paths["draft"].read_bytes()) == result.draft
    assert json.loads(paths["delta"].read_text())["removes"] == [{"id": "G_5"}]


def test_empty_draft_skips_edge_stage():
    result = extract_graph_detailed(
        CORPUS / "svg" / "item3_gen.svg", ExtractionConfig(), mock_client(), Provenance.GENERATED, STUB_RENDERER
    )
    assert len(result.graph) == 0 and result.delta.is_empty()


@pytest.mark.parametrize(
    "setup, stage",
    [
        (lambda d: d / "missing.svg", "read"),
        (lambda d: (d / "bad.svg").write_text("<svg><text>") and d / "bad.svg", "parse"),
    ],
)
def test_stage_errors(tmp_path, setup, stage):
    with pytest.raises(StageError) as info:
        extract_graph_detailed(setup(tmp_path), ExtractionConfig(), mock_client(), renderer=STUB_RENDERER)
    assert info.value.stage == stage


def test_render_and_refine_stage_errors(tmp_path):
    svg = CORPUS / "svg" / "item1_ref.svg"
    with pytest.raises(StageError) as info:
        extract_graph_detailed(svg, ExtractionConfig(), mock_client(), renderer=("no-such-renderer-xyz",))
    assert info.value.stage == "render"
    empty = ModelClient(MockBackend(tmp_path))
    with pytest.raises(StageError) as info:
        extract_graph_detailed(svg, ExtractionConfig(), empty, renderer=STUB_RENDERER)
    assert info.value.stage == "refine"


# --- batch ------------------------------------------------------------------------

def test_batch_over_corpus(tmp_path):
    records, _ = load_corpus(CORPUS / "manifest.jsonl")
    summary = run_batch(records, "model-a", SETTINGS, mock_client(), out_dir=tmp_path, parallelism=2)
    vectors = {k: r.metric_vector() for k, r in summary.per_item.items()}
    assert vectors["item1"] == pytest.approx((1.0, 0.75, 6 / 7, 1.0, 1.0, 1.0))
    assert vectors["item2"] == (1.0,) * 6
    assert vectors["item3"] == (0.0,) * 6 and summary.per_item["item3"].path.degenerate
    assert vectors["item4"] == (1.0,) * 6
    assert vectors["item5"] == pytest.approx((0.75, 0.75, 0.75, 0.0, 0.0, 0.0))
    assert summary.means["node_precision"] == pytest.approx(0.75)
    assert summary.means["path_f1"] == pytest.approx(0.6)
    assert summary.degenerate_count == 1
    assert sorted(p.name for p in (tmp_path / "reports").iterdir()) == [f"item{i}.json" for i in range(1, 6)]
    assert (tmp_path / "items" / "item4" / "reference.graph.delta.json").exists()
    assert json.loads((tmp_path / "summary.json").read_text())["item_count"] == 5


def test_exclude_degenerate():
    records, _ = load_corpus(CORPUS / "manifest.jsonl")
    summary = run_batch(records, "model-a", SETTINGS, mock_client(), exclude_degenerate=True)
    assert "item3" not in summary.included_items
    assert summary.means["path_f1"] == pytest.approx(3 / 4)


def test_failures_recorded_and_abort(tmp_path):
    records, _ = load_corpus(CORPUS / "manifest.jsonl")
    partial = tmp_path / "replies"
    shutil.copytree(REPLIES, partial)
    client = ModelClient(MockBackend(partial), sleep=lambda s: None)
    # break one item: a missing generated file fails at the read stage
    broken = records[0].__class__(**{**records[0].__dict__, "generated_svg_paths": {"model-a": str(tmp_path / "x.svg")}})
    summary = run_batch([broken, *records[1:]], "model-a", SETTINGS, client)
    assert [(f.item_id, f.stage) for f in summary.failures] == [("item1", "read")]
    assert "item1" not in summary.per_item
    with pytest.raises(BatchAbortedError):
        run_batch(records, "model-a", SETTINGS, ModelClient(MockBackend(tmp_path / "none")))


def test_unknown_model_label_is_skipped():
    records, _ = load_corpus(CORPUS / "manifest.jsonl")
    summary = run_batch(records[:1], "other", SETTINGS, mock_client())
    assert summary.per_item == {} and summary.skipped[0].item_id == "item1"
    assert summary.means["node_f1"] is None and summary.correlation is None


def test_summary_is_order_independent():
    a = evaluate_pair(make_graph(["a", "b"], [(0, 1)]), make_graph(["a", "b"]))
    b = evaluate_pair(make_graph(["a"]), make_graph(["a", "c"]))
    one = summarize("m", {"x": a, "y": b}).to_dict()
    two = summarize("m", {"y": b, "x": a}).to_dict()
    assert json.dumps(one) == json.dumps(two)


# --- stats -------------------------------------------------------------------------

def test_histogram_binning():
    bins = histogram([0.0, 0.05, 0.5, 0.999, 1.0])
    assert len(bins) == 20
    assert [b.count for b in bins if b.count] == [1, 1, 1, 2]
    assert bins[1].count == 1 and bins[-1].count == 2
    with pytest.raises(ValueError):
        histogram([1.5])


def test_correlation_zero_variance_and_bounds():
    rows = [dict(zip(["node_precision", "node_recall", "node_f1", "path_precision", "path_recall", "path_f1"], v))
            for v in ([1, 0.5, 0.2, 0.3, 0.3, 1], [1, 0.7, 0.4, 0.1, 0.3, 0], [1, 0.9, 0.6, 0.2, 0.3, 1])]
    corr = correlation_matrix(rows)
    assert corr.zero_variance == ("node_precision", "path_recall")
    m = corr.matrix
    assert m[0][1] == 0.0 and m[0][0] == 1.0
    assert m[1][2] == pytest.approx(1.0)
    assert all(-1.0 <= v <= 1.0 for row in m for v in row)
    with pytest.raises(StatsError):
        correlation_matrix(rows[:1])


def test_external_csv(tmp_path):
    path = tmp_path / "ext.csv"
    path.write_text("item_id,human\nb,0.2\na,0.9\n")
    assert read_external_csv(path, ["a", "b"]) == {"human": [0.9, 0.2]}
    with pytest.raises(StatsError):
        read_external_csv(path, ["a", "c"])


# --- CLI ---------------------------------------------------------------------------

def test_cli_usage_errors(capsys):
    assert main([]) == 1
    assert main(["eval", "--gen", "x"]) == 1
    assert main(["frobnicate"]) == 1


def test_cli_eval(tmp_path, capsys):
    gen, ref = tmp_path / "g.json", tmp_path / "r.json"
    gen.write_bytes(serialize_graph(make_graph(["a", "b"], [(0, 1)])))
    ref.write_bytes(serialize_graph(make_graph(["a", "b"], [(0, 1)], provenance="reference")))
    out = tmp_path / "report.json"
    assert main(["eval", "--gen", str(gen), "--ref", str(ref), "--out", str(out), "--path-mode", "induced"]) == 0
    report = json.loads(out.read_text())
    assert report["path_mode"] == "induced" and report["path"]["f1"] == 1.0
    assert main(["eval", "--gen", str(tmp_path / "nope.json"), "--ref", str(ref)]) == 3


def test_cli_extract(tmp_path, config_file):
    out = tmp_path / "g.json"
    argv = ["--config", str(config_file), "--mock", str(REPLIES), "extract",
            "--in", str(CORPUS / "svg" / "item2_ref.svg"), "--out", str(out), "--provenance", "reference"]
    assert main(argv) == 0
    assert len(parse_graph(out.read_bytes())) == 3
    assert main(["extract", "--in", "x.svg", "--out", str(out)]) == 3  # no endpoint configured


def test_cli_batch_and_stats(tmp_path, config_file):
    out = tmp_path / "run"
    assert main(["batch", "--config", str(config_file), "--mock", str(REPLIES),
                 "--manifest", str(CORPUS / "manifest.jsonl"), "--model", "model-a", "--out", str(out)]) == 0
    ext = tmp_path / "ext.csv"
    ext.write_text("item_id,human\n" + "".join(f"item{i},{i / 10}\n" for i in range(1, 6)))
    stats = tmp_path / "stats"
    assert main(["stats", "--reports", str(out / "reports"), "--external", str(ext), "--out", str(stats)]) == 0
    with open(stats / "correlation.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["metric", "node_precision", "node_recall", "node_f1",
                       "path_precision", "path_recall", "path_f1", "human"]
    assert all(math.isfinite(float(v)) for row in rows[1:] for v in row[1:])
    assert (stats / "histogram_path_f1.csv").read_text().startswith("bin_lower,bin_upper,count\n")


def test_cli_batch_abort_exit_code(tmp_path, config_file):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["batch", "--config", str(config_file), "--mock", str(empty),
                 "--manifest", str(CORPUS / "manifest.jsonl"), "--model", "model-a", "--out", str(tmp_path / "o")]) == 2


def test_cli_generate(tmp_path):
    replies = tmp_path / "replies"
    from diagram_align.model.backends import record_fixture
    from diagram_align.model.prompts import generation_prompt

    record_fixture(replies, generation_prompt("ctx text", "A caption"), "```svg\n<svg xmlns='http://www.w3.org/2000/svg'/>\n```")
    ctx = tmp_path / "ctx.txt"
    ctx.write_text("ctx text")
    out = tmp_path / "out.svg"
    assert main(["--mock", str(replies), "generate", "--context", str(ctx), "--caption", "A caption", "--out", str(out)]) == 0
    assert out.read_bytes() == b"<svg xmlns='http://www.w3.org/2000/svg'/>"
