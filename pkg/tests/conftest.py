"""Shared fixtures and plan generators for the test suite."""

from __future__ import annotations

import random
from pathlib import Path

import pytest
from hypothesis import strategies as st

from planweave.agents import default_registry
from planweave.plan import DataEdge, InputSlot, OutputSlot, PlanGraph, TaskNode

ROOT = Path(__file__).resolve().parents[1]
CORPUS_PATH = ROOT / "src" / "planweave" / "data" / "corpus.json"
LM_FIXTURES = ROOT / "fixtures" / "lm"
WEB_FIXTURES = ROOT / "fixtures" / "web"
GOLDEN_DIR = ROOT / "tests" / "golden"

ARITH_AGENTS = ("add", "subtract", "multiply", "divide")


@pytest.fixture(scope="session")
def registry():
    return default_registry()


def make_node(
    nid: int,
    agent: str = "add",
    task: str = "",
    inputs: list[tuple[str, object]] | None = None,
    outputs: list[str] | None = None,
    config: dict | None = None,
) -> TaskNode:
    if inputs is None:
        inputs = [("a", 1), ("b", 2)]
    if outputs is None:
        outputs = ["out"]
    return TaskNode(
        id=nid,
        agent=agent,
        task=task or f"step {nid}",
        inputs=[InputSlot(name=n, value=v) for n, v in inputs],
        outputs=[OutputSlot(name=n) for n in outputs],
        config=dict(config or {}),
    )


def chain_plan(n: int = 3, agent: str = "add", query: str = "chain") -> PlanGraph:
    """1 -> 2 -> ... -> n, each node one input/one output."""
    nodes = [
        make_node(i, agent=agent, inputs=[("in", 1 if i == 1 else None)], outputs=["out"])
        for i in range(1, n + 1)
    ]
    edges = [DataEdge(i, i + 1, "out", "in") for i in range(1, n)]
    return PlanGraph(query=query, nodes=nodes, edges=edges)


def diamond_plan() -> PlanGraph:
    """1 -> {2, 3} -> 4."""
    nodes = [
        make_node(1, inputs=[("in", 1)], outputs=["out"]),
        make_node(2, agent="multiply", inputs=[("in", None)], outputs=["out"]),
        make_node(3, agent="subtract", inputs=[("in", None)], outputs=["out"]),
        make_node(4, agent="divide", inputs=[("x", None), ("y", None)], outputs=["out"]),
    ]
    edges = [
        DataEdge(1, 2, "out", "in"),
        DataEdge(1, 3, "out", "in"),
        DataEdge(2, 4, "out", "x"),
        DataEdge(3, 4, "out", "y"),
    ]
    return PlanGraph(query="diamond", nodes=nodes, edges=edges)


# --- hypothesis strategies --------------------------------------------------

wire_values = st.one_of(
    st.none(),
    st.integers(min_value=-1000, max_value=1000),
    st.floats(allow_nan=False, allow_infinity=False, width=32),
    st.text(max_size=12),
    st.lists(st.text(max_size=6), max_size=3),
)

port_names = st.sampled_from(["a", "b", "c", "val", "num", "result"])


@st.composite
def plan_graphs(draw, min_nodes: int = 2, max_nodes: int = 6) -> PlanGraph:
    """Structurally valid plans: unique ids, forward edges only, real ports."""
    n = draw(st.integers(min_nodes, max_nodes))
    ids = sorted(draw(st.sets(st.integers(0, 30), min_size=n, max_size=n)))
    nodes = []
    for nid in ids:
        agent = draw(st.sampled_from(ARITH_AGENTS))
        n_in = draw(st.integers(1, 2))
        in_names = draw(st.lists(port_names, min_size=n_in, max_size=n_in, unique=True))
        n_out = draw(st.integers(1, 2))
        out_names = draw(st.lists(port_names, min_size=n_out, max_size=n_out, unique=True))
        inputs = [InputSlot(name=name, value=draw(wire_values)) for name in in_names]
        nodes.append(
            TaskNode(
                id=nid,
                agent=agent,
                task=f"do {agent}",
                inputs=inputs,
                outputs=[OutputSlot(name=name) for name in out_names],
            )
        )
    edges = []
    seen = set()
    for i, src in enumerate(nodes):
        for dest in nodes[i + 1 :]:
            if draw(st.booleans()) and draw(st.booleans()):
                quad = (
                    src.id,
                    dest.id,
                    draw(st.sampled_from([o.name for o in src.outputs])),
                    draw(st.sampled_from([s.name for s in dest.inputs])),
                )
                if quad not in seen:
                    seen.add(quad)
                    edges.append(DataEdge(*quad))
    return PlanGraph(query="generated", nodes=nodes, edges=edges)


def random_edited_pair(rng: random.Random, max_nodes: int = 4) -> tuple[PlanGraph, PlanGraph]:
    """A seeded (base, mutated) pair used by the GED oracle suite."""
    base = _random_small_plan(rng, max_nodes)
    target = _random_small_plan(rng, max_nodes)
    return base, target


def _random_small_plan(rng: random.Random, max_nodes: int) -> PlanGraph:
    n = rng.randint(1, max_nodes)
    ids = sorted(rng.sample(range(0, 12), n))
    nodes = [
        make_node(nid, agent=rng.choice(ARITH_AGENTS), inputs=[("a", 1), ("b", 2)], outputs=["out"])
        for nid in ids
    ]
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.45:
                edges.append(DataEdge(ids[i], ids[j], "out", rng.choice(["a", "b"])))
    # dedup quads
    unique = {e.quad(): e for e in edges}
    return PlanGraph(query="ged-case", nodes=nodes, edges=list(unique.values()))
