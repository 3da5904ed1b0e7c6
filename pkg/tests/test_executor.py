"""Execution coordinator: full runs, single nodes, staleness, overrides."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planweave.errors import NodeFailure, UnboundInput, UnknownNode, UnknownOutput
from planweave.executor import (
    execute_all,
    execute_node,
    extract_final_answer,
    mark_stale,
    override_output,
    resume_stale,
)
from planweave.plan import (
    DataEdge,
    InputSlot,
    NodeStatus,
    OutputSlot,
    PlanGraph,
    TaskNode,
    parse_plan,
    serialize_plan,
)
from tests.conftest import make_node


def two_node_add_plan(query="what is 3 plus 4"):
    nodes = [
        TaskNode(
            id=1,
            agent="identify_operands",
            task=f"Identify operands in: {query}",
            inputs=[InputSlot("query", value=query)],
            outputs=[OutputSlot("operands")],
        ),
        TaskNode(
            id=2,
            agent="add",
            task="Add the operands.",
            inputs=[InputSlot("numbers")],
            outputs=[OutputSlot("sum")],
        ),
    ]
    return PlanGraph(query=query, nodes=nodes, edges=[DataEdge(1, 2, "operands", "numbers")])


def arith_chain(values=(3, 4)):
    """add(a, b) -> multiply(x, 2): answer (a+b)*2."""
    a, b = values
    nodes = [
        make_node(1, "add", inputs=[("a", a), ("b", b)], outputs=["sum"]),
        make_node(2, "multiply", inputs=[("x", None), ("two", 2)], outputs=["product"]),
    ]
    return PlanGraph(query="chain", nodes=nodes, edges=[DataEdge(1, 2, "sum", "x")])


class TestExecuteAll:
    def test_identify_then_add(self, registry):
        plan, trace = execute_all(two_node_add_plan(), registry)
        assert trace.final_answer == 7
        assert all(n.status is NodeStatus.DONE for n in plan.nodes)

    def test_divide_by_zero_isolates_branch(self, registry):
        # 1 -> 2(divide by 0) -> 3, with independent 4 -> 5
        nodes = [
            make_node(1, "add", inputs=[("a", 1), ("b", 2)], outputs=["out"]),
            make_node(2, "divide", inputs=[("x", None), ("zero", 0)], outputs=["out"]),
            make_node(3, "add", inputs=[("x", None), ("y", 1)], outputs=["out"]),
            make_node(4, "add", inputs=[("a", 2), ("b", 2)], outputs=["out"]),
            make_node(5, "multiply", inputs=[("x", None), ("y", 3)], outputs=["out"]),
        ]
        edges = [
            DataEdge(1, 2, "out", "x"),
            DataEdge(2, 3, "out", "x"),
            DataEdge(4, 5, "out", "x"),
        ]
        plan = PlanGraph(query="q", nodes=nodes, edges=edges)
        result, trace = execute_all(plan, registry)
        assert result.node(2).status is NodeStatus.FAILED
        assert result.node(3).status is NodeStatus.FAILED_UPSTREAM
        assert result.node(4).status is NodeStatus.DONE
        assert result.node(5).status is NodeStatus.DONE
        assert result.node(5).outputs[0].value == 12

    def test_prebound_plan_runs_without_edges(self, registry):
        nodes = [
            make_node(1, "add", inputs=[("a", 1), ("b", 1)], outputs=["out"]),
            make_node(2, "add", inputs=[("a", 2), ("b", 2)], outputs=["out"]),
        ]
        plan = PlanGraph(query="q", nodes=nodes, edges=[])
        result, trace = execute_all(plan, registry)
        assert result.node(1).outputs[0].value == 2
        assert result.node(2).outputs[0].value == 4

    def test_final_answer_is_largest_id_sink(self, registry):
        nodes = [
            make_node(1, "add", inputs=[("a", 1), ("b", 1)], outputs=["out"]),
            make_node(7, "add", inputs=[("a", 3), ("b", 4)], outputs=["out"]),
        ]
        plan = PlanGraph(query="q", nodes=nodes, edges=[])
        _, trace = execute_all(plan, registry)
        assert trace.final_answer == 7

    def test_trace_is_topological(self, registry):
        plan = arith_chain()
        _, trace = execute_all(plan, registry)
        assert [r.node_id for r in trace.records] == [1, 2]

    def test_trace_jsonl_shape(self, registry):
        _, trace = execute_all(arith_chain(), registry)
        lines = trace.to_jsonl().splitlines()
        records = [json.loads(line) for line in lines]
        assert records[-1] == {"final_answer": 14}
        assert records[0]["node"] == 1
        assert [t["status"] for t in records[0]["transitions"]] == ["running", "done"]


class TestExecuteNode:
    def test_rerun_after_edit_marks_dependents_stale(self, registry):
        plan, _ = execute_all(arith_chain(), registry)
        plan.node(1).inputs[0].value = 10
        plan.node(1).task = "Add ten and four."
        rerun, record = execute_node(plan, 1, registry)
        assert rerun.node(1).status is NodeStatus.DONE
        assert rerun.node(1).outputs[0].value == 14
        assert rerun.node(2).status is NodeStatus.STALE
        # stale node keeps its previous output
        assert rerun.node(2).outputs[0].value == 14

    def test_unbound_edge_input_fails(self, registry):
        plan = arith_chain()  # node 1 never ran
        with pytest.raises(NodeFailure) as excinfo:
            execute_node(plan, 2, registry)
        assert isinstance(excinfo.value.cause, UnboundInput)

    def test_source_node_with_constants_runs_alone(self, registry):
        plan = arith_chain()
        result, record = execute_node(plan, 1, registry)
        assert result.node(1).status is NodeStatus.DONE
        assert result.node(2).status is NodeStatus.PENDING
        assert record.result.outputs == {"sum": 7}

    def test_unknown_node(self, registry):
        with pytest.raises(UnknownNode):
            execute_node(arith_chain(), 9, registry)


class TestResumeStale:
    def test_only_stale_suffix_reruns(self, registry):
        plan, _ = execute_all(arith_chain(), registry)
        plan = mark_stale(plan, 2)
        resumed, trace = resume_stale(plan, registry)
        assert [r.node_id for r in trace.records] == [2]
        assert resumed.node(1).status is NodeStatus.DONE
        assert resumed.node(2).status is NodeStatus.DONE

    def test_noop_without_stale(self, registry):
        plan, _ = execute_all(arith_chain(), registry)
        resumed, trace = resume_stale(plan, registry)
        assert trace.records == []
        assert resumed == plan

    def test_diamond_single_branch(self, registry):
        # 1 -> 2 -> 4 and 1 -> 3 -> 4: staling 2 re-runs {2, 4} only
        nodes = [
            make_node(1, "add", inputs=[("a", 1), ("b", 2)], outputs=["out"]),
            make_node(2, "multiply", inputs=[("x", None), ("k", 2)], outputs=["out"]),
            make_node(3, "multiply", inputs=[("x", None), ("k", 3)], outputs=["out"]),
            make_node(4, "add", inputs=[("p", None), ("q", None)], outputs=["out"]),
        ]
        edges = [
            DataEdge(1, 2, "out", "x"),
            DataEdge(1, 3, "out", "x"),
            DataEdge(2, 4, "out", "p"),
            DataEdge(3, 4, "out", "q"),
        ]
        plan, _ = execute_all(PlanGraph(query="d", nodes=nodes, edges=edges), registry)
        plan = mark_stale(plan, 2)
        resumed, trace = resume_stale(plan, registry)
        assert [r.node_id for r in trace.records] == [2, 4]
        assert resumed.node(3).status is NodeStatus.DONE
        assert resumed.node(4).outputs[0].value == 15  # 3*2 + 3*3


class TestOverride:
    def test_override_feeds_downstream(self, registry):
        plan, _ = execute_all(arith_chain(), registry)
        plan, record = override_output(plan, 1, "sum", 100)
        assert record.supersedes == 7
        assert plan.node(1).status is NodeStatus.DONE_OVERRIDDEN
        assert plan.node(2).status is NodeStatus.STALE
        resumed, trace = resume_stale(plan, registry)
        assert resumed.node(2).outputs[0].value == 200

    def test_fresh_run_supersedes_override(self, registry):
        plan, _ = execute_all(arith_chain(), registry)
        plan, _ = override_output(plan, 1, "sum", 100)
        rerun, record = execute_node(plan, 1, registry)
        assert rerun.node(1).status is NodeStatus.DONE
        assert rerun.node(1).outputs[0].value == 7

    def test_override_pending_node_allowed(self, registry):
        plan = arith_chain()
        plan, record = override_output(plan, 1, "sum", 42)
        assert plan.node(1).status is NodeStatus.DONE_OVERRIDDEN
        assert record.supersedes is None

    def test_unknown_output(self, registry):
        with pytest.raises(UnknownOutput):
            override_output(arith_chain(), 1, "nope", 1)


class TestPropagationProperties:
    @settings(max_examples=40, deadline=None)
    @given(
        consts=st.lists(st.integers(1, 9), min_size=3, max_size=5),
        ops=st.lists(st.sampled_from(["add", "multiply", "subtract"]), min_size=2, max_size=4),
    )
    def test_input_values_equal_source_outputs(self, registry, consts, ops):
        # random chain: node i+1 consumes node i's output plus a constant
        nodes = [make_node(1, "add", inputs=[("a", consts[0]), ("b", consts[1])], outputs=["out"])]
        edges = []
        for i, op in enumerate(ops, start=2):
            const = consts[(i - 2) % len(consts)]
            nodes.append(make_node(i, op, inputs=[("x", None), ("c", const)], outputs=["out"]))
            edges.append(DataEdge(i - 1, i, "out", "x"))
        plan = PlanGraph(query="p", nodes=nodes, edges=edges)
        result, _ = execute_all(plan, registry)
        for edge in result.edges:
            src_value = result.node(edge.src_node).find_output(edge.src_output).value
            dest_value = result.node(edge.dest_node).find_input(edge.dest_input).value
            assert dest_value == src_value

    @settings(max_examples=25, deadline=None)
    @given(
        consts=st.lists(st.integers(1, 9), min_size=4, max_size=4),
    )
    def test_execute_all_deterministic(self, registry, consts):
        nodes = [
            make_node(1, "add", inputs=[("a", consts[0]), ("b", consts[1])], outputs=["out"]),
            make_node(2, "multiply", inputs=[("x", None), ("k", consts[2])], outputs=["out"]),
            make_node(3, "subtract", inputs=[("x", None), ("c", consts[3])], outputs=["out"]),
        ]
        edges = [DataEdge(1, 2, "out", "x"), DataEdge(2, 3, "out", "x")]
        plan = PlanGraph(query="p", nodes=nodes, edges=edges)
        first, trace_a = execute_all(plan, registry)
        second, trace_b = execute_all(plan, registry)
        assert serialize_plan(first) == serialize_plan(second)
        assert trace_a.to_jsonl() == trace_b.to_jsonl()


class TestStatusMachine:
    def test_legal_transition_sequences_on_three_node_plan(self, registry):
        """Enumerate edit/exec sequences and check every observed transition
        is one the status machine allows."""
        from planweave.edits import EditOp, apply_edit

        allowed = {
            (NodeStatus.PENDING, NodeStatus.PENDING),
            (NodeStatus.PENDING, NodeStatus.RUNNING),
            (NodeStatus.PENDING, NodeStatus.DONE),
            (NodeStatus.PENDING, NodeStatus.FAILED),
            (NodeStatus.PENDING, NodeStatus.FAILED_UPSTREAM),
            (NodeStatus.PENDING, NodeStatus.DONE_OVERRIDDEN),
            (NodeStatus.RUNNING, NodeStatus.DONE),
            (NodeStatus.RUNNING, NodeStatus.FAILED),
            (NodeStatus.DONE, NodeStatus.DONE),
            (NodeStatus.DONE, NodeStatus.STALE),
            (NodeStatus.DONE, NodeStatus.DONE_OVERRIDDEN),
            (NodeStatus.DONE, NodeStatus.RUNNING),
            (NodeStatus.DONE, NodeStatus.PENDING),
            (NodeStatus.STALE, NodeStatus.STALE),
            (NodeStatus.STALE, NodeStatus.RUNNING),
            (NodeStatus.STALE, NodeStatus.DONE),
            (NodeStatus.STALE, NodeStatus.DONE_OVERRIDDEN),
            (NodeStatus.STALE, NodeStatus.PENDING),
            (NodeStatus.DONE_OVERRIDDEN, NodeStatus.STALE),
            (NodeStatus.DONE_OVERRIDDEN, NodeStatus.DONE),
            (NodeStatus.DONE_OVERRIDDEN, NodeStatus.RUNNING),
            (NodeStatus.DONE_OVERRIDDEN, NodeStatus.PENDING),
            (NodeStatus.DONE_OVERRIDDEN, NodeStatus.DONE_OVERRIDDEN),
            (NodeStatus.FAILED, NodeStatus.PENDING),
            (NodeStatus.FAILED, NodeStatus.RUNNING),
            (NodeStatus.FAILED, NodeStatus.DONE),
            (NodeStatus.FAILED_UPSTREAM, NodeStatus.PENDING),
            (NodeStatus.FAILED_UPSTREAM, NodeStatus.RUNNING),
            (NodeStatus.FAILED_UPSTREAM, NodeStatus.DONE),
        }

        def snapshot(plan):
            return {n.id: n.status for n in plan.nodes}

        def check(before, after):
            for nid, status in before.items():
                if nid in after:
                    assert (status, after[nid]) in allowed, f"{nid}: {status} -> {after[nid]}"

        base = PlanGraph(
            query="q",
            nodes=[
                make_node(1, "add", inputs=[("a", 1), ("b", 2)], outputs=["out"]),
                make_node(2, "multiply", inputs=[("x", None), ("k", 2)], outputs=["out"]),
                make_node(3, "add", inputs=[("x", None), ("c", 1)], outputs=["out"]),
            ],
            edges=[DataEdge(1, 2, "out", "x"), DataEdge(2, 3, "out", "x")],
        )

        actions = {
            "execute_all": lambda p: execute_all(p, registry)[0],
            "execute_node_1": lambda p: execute_node(p, 1, registry)[0],
            "edit_task_2": lambda p: apply_edit(p, EditOp("set_task", {"node": 2, "task": "x"})),
            "override_1": lambda p: override_output(p, 1, "out", 9)[0],
            "resume": lambda p: resume_stale(p, registry)[0],
        }
        import itertools

        for sequence in itertools.product(actions, repeat=3):
            plan = base
            for name in sequence:
                before = snapshot(plan)
                try:
                    plan = actions[name](plan)
                except NodeFailure:
                    continue
                check(before, snapshot(plan))


class TestStaleClosureExactness:
    @settings(max_examples=30, deadline=None)
    @given(stale_seed=st.integers(0, 10_000))
    def test_resume_touches_exactly_the_stale_closure(self, registry, stale_seed):
        """resume_stale after mark_stale(S) re-runs S union dependents(S),
        nothing else."""
        import random as _random

        from planweave.plan import dependents as deps

        nodes = [
            make_node(1, "add", inputs=[("a", 1), ("b", 2)], outputs=["out"]),
            make_node(2, "multiply", inputs=[("x", None), ("k", 2)], outputs=["out"]),
            make_node(3, "multiply", inputs=[("x", None), ("k", 3)], outputs=["out"]),
            make_node(4, "add", inputs=[("p", None), ("q", None)], outputs=["out"]),
            make_node(5, "subtract", inputs=[("x", None), ("c", 1)], outputs=["out"]),
        ]
        edges = [
            DataEdge(1, 2, "out", "x"),
            DataEdge(1, 3, "out", "x"),
            DataEdge(2, 4, "out", "p"),
            DataEdge(3, 4, "out", "q"),
            DataEdge(4, 5, "out", "x"),
        ]
        plan, _ = execute_all(PlanGraph(query="w", nodes=nodes, edges=edges), registry)

        rng = _random.Random(stale_seed)
        seeds = rng.sample([1, 2, 3, 4, 5], rng.randint(1, 3))
        expected = set(seeds)
        for node_id in seeds:
            expected |= deps(plan, node_id)
            plan = mark_stale(plan, node_id)

        resumed, trace = resume_stale(plan, registry)
        touched = {r.node_id for r in trace.records}
        assert touched == expected
        assert all(n.status is NodeStatus.DONE for n in resumed.nodes)
