from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest

from diagram_align.graph import DiagramGraph, DirectedEdge, Origin, TextNode

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS = FIXTURES / "corpus"
STUB_RENDERER = (sys.executable, str(FIXTURES / "stub_renderer.py"))

VOCAB = [
    "Encoder", "encoder", "Encoders", "Decoder", "decoder.", "Attention", "Attn",
    "Multi-Head Attention", "Feed Forward", "Feed-Forward", "Loss", "Loss Fn",
    "Input", "Inputs", "Output", "Outputs", "Retriever", "Reranker", "Backbone", "Head",
]


def make_graph(texts, edges=(), provenance="generated") -> DiagramGraph:
    """texts[i] becomes node G_{i+1}; edges are 0-based index pairs."""
    nodes = tuple(TextNode(f"G_{i + 1}", t, Origin.MODEL_ADDED) for i, t in enumerate(texts))
    return DiagramGraph(
        nodes,
        frozenset(DirectedEdge(f"G_{s + 1}", f"G_{t + 1}") for s, t in edges if s != t),
        provenance,
    )


def as_oracle_input(graph: DiagramGraph) -> dict:
    idx = {n.id: int(n.id[2:]) for n in graph.nodes}
    return {
        "nodes": [(idx[n.id], n.text) for n in graph.nodes],
        "edges": [(idx[e.source], idx[e.target]) for e in graph.edges],
    }


def random_graph(rng: random.Random, max_nodes=10, distinct=False, min_nodes=0, vocab=VOCAB) -> DiagramGraph:
    n = rng.randint(min_nodes, max_nodes)
    if distinct:
        texts = [f"{rng.choice(vocab)} {i}" for i in range(n)]
    else:
        texts = [rng.choice(vocab) for _ in range(n)]
    density = rng.random() * 0.4
    edges = [(s, t) for s in range(n) for t in range(n) if s != t and rng.random() < density]
    return make_graph(texts, edges)


@pytest.fixture
def stub_renderer():
    return STUB_RENDERER


def prompt_as_parts(prompt) -> list[dict]:
    """Encode a prompt the way golden_prompts.json stores it."""
    from diagram_align.model.prompts import ImagePart

    return [{"image": True} if isinstance(p, ImagePart) else {"text": p} for p in prompt]


class ScriptedBackend:
    """Returns queued replies (or raises queued exceptions) in order, logging prompts."""

    def __init__(self, *replies):
        self.replies = list(replies)
        self.prompts = []

    def complete(self, prompt):
        self.prompts.append(prompt)
        reply = self.replies.pop(0)
        if isinstance(reply, Exception):
            raise reply
        return reply


def no_sleep_client(backend, **kwargs):
    from diagram_align.model.backends import ModelClient

    sleeps = []
    client = ModelClient(backend, sleep=sleeps.append, **kwargs)
    client.sleeps = sleeps
    return client


# --- acceptance reporting ------------------------------------------------------

ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def pytest_runtest_logreport(report):
    marker = getattr(report, "acceptance", None)
    if marker is None or report.when != "call":
        return
    number, title = marker
    ACCEPTANCE_RESULTS[number] = (report.passed, title)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        outcome.get_result().acceptance = marker.args


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, title = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {title}")
