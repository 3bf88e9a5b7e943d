import math
import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES, as_oracle_input, make_graph, random_graph
from diagram_align.alignment import (
    AlignmentReport,
    MatchConfig,
    PathMode,
    evaluate_pair,
    levenshtein,
    match_nodes,
    normalize_text,
    text_similarity,
)
from diagram_align.graph import parse_graph
from oracles import edit_distance, norm, oracle_report

WORKED = FIXTURES / "worked"


def load(name):
    return parse_graph((WORKED / f"{name}.json").read_bytes())


@pytest.mark.parametrize(
    "raw, expected",
    [
        ("  Multi-Head\tAttention. ", "multi-head attention"),
        ("(Encoder)", "encoder"),
        ("C++", "c++"),
        ("...", ""),
        ("ÉCOLE", "école"),
    ],
)
def test_normalize_text(raw, expected):
    assert normalize_text(raw) == expected


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=12), st.text(max_size=12))
def test_levenshtein_matches_recursive_oracle(a, b):
    assert levenshtein(a, b) == edit_distance(a, b)
    assert levenshtein(a, b) == levenshtein(b, a)


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=15), st.text(max_size=15))
def test_similarity_bounds_and_symmetry(a, b):
    s = text_similarity(a, b)
    assert 0.0 <= s <= 1.0
    assert s == text_similarity(b, a)
    assert normalize_text(a) == norm(a)
    if normalize_text(a) == normalize_text(b):
        assert s == 1.0


def test_similarity_examples():
    assert text_similarity("Encoder", "encoder.") == 1.0
    assert text_similarity("Encoder", "Encoders") == pytest.approx(1 - 1 / 8)
    assert text_similarity("", "abc") == 0.0


def test_threshold_is_inclusive():
    # "abcde" vs "abcdx": similarity exactly 0.8
    gen, ref = make_graph(["abcde"]), make_graph(["abcdx"], provenance="reference")
    assert len(match_nodes(gen, ref, MatchConfig(0.8))) == 1
    assert len(match_nodes(gen, ref, MatchConfig(0.81))) == 0


def test_ties_break_by_numeric_id():
    gen = make_graph(["loss"] * 11)
    ref = make_graph(["loss", "loss"], provenance="reference")
    pairs = match_nodes(gen, ref).pairs
    assert [(p.gen_id, p.ref_id) for p in pairs] == [("G_1", "G_1"), ("G_2", "G_2")]


def test_worked_path_example():
    r = evaluate_pair(load("paths_gen"), load("paths_ref"))
    assert (r.path.tp, r.path.fp, r.path.fn) == (1, 2, 0)
    assert r.path.precision == pytest.approx(1 / 3)
    assert r.path.recall == 1.0
    assert r.path.f1 == pytest.approx(0.5)


def test_worked_skip_node_example():
    gen, ref = load("skip_gen"), load("skip_ref")
    full = evaluate_pair(gen, ref, MatchConfig(path_mode=PathMode.FULL_GRAPH))
    induced = evaluate_pair(gen, ref, MatchConfig(path_mode=PathMode.INDUCED))
    assert full.metric_vector()[3:] == (1.0, 1.0, 1.0)
    assert induced.metric_vector()[3:] == (0.0, 0.0, 0.0)
    assert full.modes_disagree and full.alternate_path == induced.path


def test_worked_node_example():
    r = evaluate_pair(load("nodes_gen"), load("nodes_ref"))
    assert r.node.precision == pytest.approx(2 / 3)
    assert r.node.recall == pytest.approx(0.5)
    assert r.node.f1 == pytest.approx(4 / 7)
    assert r.unmatched_gen == ("G_3",) and r.unmatched_ref == ("G_3", "G_4")


def test_empty_graphs():
    r = evaluate_pair(make_graph([]), make_graph([], provenance="reference"))
    assert r.metric_vector() == (1.0, 1.0, 1.0, 0.0, 0.0, 0.0)
    assert r.path.degenerate


def test_one_side_empty():
    r = evaluate_pair(make_graph([]), make_graph(["a", "b"], [(0, 1)], provenance="reference"))
    assert r.node.precision == 0.0 and r.node.recall == 0.0 and r.path.degenerate


def test_single_match_is_degenerate():
    r = evaluate_pair(make_graph(["a", "zzz"]), make_graph(["a", "qqq"], provenance="reference"))
    assert len(r.matching) == 1 and r.path.degenerate
    assert all(math.isfinite(v) for v in r.metric_vector())


def test_edgeless_identity_is_perfect():
    g = make_graph(["a", "b", "c"])
    r = evaluate_pair(g, g)
    assert r.metric_vector() == (1.0,) * 6 and not r.path.degenerate


def test_report_dict_round_trip():
    r = evaluate_pair(load("skip_gen"), load("skip_ref"))
    assert AlignmentReport.from_dict(r.to_dict()) == r


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(list(PathMode)))
def test_evaluate_matches_oracle(seed, mode):
    rng = random.Random(seed)
    gen, ref = random_graph(rng), random_graph(rng)
    r = evaluate_pair(gen, ref, MatchConfig(path_mode=mode))
    o = oracle_report(as_oracle_input(gen), as_oracle_input(ref), induced=mode is PathMode.INDUCED)
    assert sorted((int(p.gen_id[2:]), int(p.ref_id[2:])) for p in r.matching.pairs) == o["match"]
    n = r.node
    assert (n.tp, n.fp, n.fn) == o["node"][:3]
    assert (n.precision, n.recall, n.f1) == pytest.approx(o["node"][3:], abs=1e-12)
    p = r.path
    assert (p.tp, p.fp, p.fn, p.degenerate) == (*o["path"][:3], o["path"][6])
    assert (p.precision, p.recall, p.f1) == pytest.approx(o["path"][3:6], abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_swap_exchanges_precision_and_recall(seed):
    rng = random.Random(seed)
    a, b = random_graph(rng), random_graph(rng)
    ab, ba = evaluate_pair(a, b), evaluate_pair(b, a)
    assert ab.node.precision == pytest.approx(ba.node.recall, abs=1e-12)
    assert ab.path.precision == pytest.approx(ba.path.recall, abs=1e-12)
    assert ab.path.f1 == pytest.approx(ba.path.f1, abs=1e-12)
