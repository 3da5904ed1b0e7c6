"""Execution coordinator: full runs, single-node runs, stale re-runs, and
manual output overrides.

Plans are immutable values; every operation returns a fresh graph with
statuses and results filled in. Value propagation is exactly edge-directed:
before a node runs, each in-edge copies its source's output value into the
destination input slot.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Any

from planweave.agents import AgentInvocation, AgentResult, Registry, execute_agent
from planweave.errors import (
    NodeFailure,
    PlanweaveError,
    UnboundInput,
    UnknownNode,
    UnknownOutput,
)
from planweave.plan import NodeStatus, PlanGraph, TaskNode, Value, dependents, topo_order


@dataclass
class NodeRecord:
    """One node's worth of execution trace."""

    node_id: int
    agent: str
    transitions: list[tuple[str, int]] = field(default_factory=list)  # (status, step)
    result: AgentResult | None = None
    error: str | None = None

    def to_wire(self) -> dict[str, Any]:
        record: dict[str, Any] = {
            "node": self.node_id,
            "agent": self.agent,
            "status": self.transitions[-1][0] if self.transitions else "pending",
            "transitions": [{"status": s, "step": t} for s, t in self.transitions],
        }
        if self.result is not None:
            record["outputs"] = self.result.outputs
        if self.error is not None:
            record["error"] = self.error
        return record


@dataclass
class ExecutionTrace:
    records: list[NodeRecord] = field(default_factory=list)
    final_answer: Value = None

    def to_jsonl(self) -> str:
        lines = [json.dumps(r.to_wire(), ensure_ascii=False) for r in self.records]
        lines.append(json.dumps({"final_answer": self.final_answer}, ensure_ascii=False))
        return "\n".join(lines)

    def record_for(self, node_id: int) -> NodeRecord | None:
        for record in self.records:
            if record.node_id == node_id:
                return record
        return None


@dataclass
class OverrideRecord:
    node_id: int
    output: str
    value: Value
    supersedes: Value


def final_answer_node(plan: PlanGraph) -> TaskNode | None:
    """The designated answer node: the unique sink, or the largest-id sink."""
    sinks = plan.sinks()
    if not sinks:
        return None
    return plan.node(max(sinks))


def extract_final_answer(plan: PlanGraph) -> Value:
    node = final_answer_node(plan)
    if node is None or not node.outputs:
        return None
    return node.outputs[0].value


def _propagate_inputs(plan: PlanGraph, node: TaskNode, finish_order: dict[int, int]) -> None:
    """Copy source output values into this node's input slots.

    When several edges feed one slot, the edge whose source finished last
    wins; sources that never ran this round rank by completion recorded in
    ``finish_order`` (absent sources rank first).
    """
    in_edges = sorted(
        plan.in_edges(node.id),
        key=lambda e: (finish_order.get(e.src_node, -1), e.quad()),
    )
    for edge in in_edges:
        src = plan.node(edge.src_node)
        if not src.status.is_done_like():
            continue
        out_slot = src.find_output(edge.src_output)
        dest_slot = node.find_input(edge.dest_input)
        if out_slot is None or dest_slot is None or out_slot.value is None:
            continue
        dest_slot.value = copy.deepcopy(out_slot.value)


def _run_node(
    plan: PlanGraph,
    node: TaskNode,
    registry: Registry,
    lm: Any,
    trace: ExecutionTrace,
    finish_order: dict[int, int],
    step: list[int],
) -> None:
    """Execute one node in place, recording transitions in the trace."""
    record = NodeRecord(node_id=node.id, agent=node.agent)
    trace.records.append(record)

    def transition(status: NodeStatus) -> None:
        node.status = status
        record.transitions.append((status.value, step[0]))
        step[0] += 1

    _propagate_inputs(plan, node, finish_order)
    missing = [s.name for s in node.inputs if s.value is None]
    if missing:
        error: PlanweaveError = UnboundInput(node.id, missing)
        transition(NodeStatus.FAILED)
        record.error = str(error)
        raise NodeFailure(node.id, error)

    transition(NodeStatus.RUNNING)
    spec = registry.get(node.agent)
    invocation = AgentInvocation(
        spec=spec,
        inputs=[(s.name, s.value) for s in node.inputs],
        config=node.config,
        task=node.task,
    )
    try:
        result = execute_agent(invocation, lm)
    except PlanweaveError as exc:
        transition(NodeStatus.FAILED)
        record.error = str(exc)
        raise NodeFailure(node.id, exc) from exc

    # agents answer with their canonical output names; plans may rename
    # ports, so fall back to positional mapping when names do not line up
    values = list(result.outputs.values())
    for index, slot in enumerate(node.outputs):
        if slot.name in result.outputs:
            slot.value = result.outputs[slot.name]
        elif index < len(values):
            slot.value = values[index]
    record.result = result
    transition(NodeStatus.DONE)
    finish_order[node.id] = step[0]


def execute_all(
    plan: PlanGraph, registry: Registry, lm: Any = None
) -> tuple[PlanGraph, ExecutionTrace]:
    """Run every node in dependency order; independent branches survive a
    failure, dependents of a failed node are marked ``failed_upstream``.
    """
    result_plan = copy.deepcopy(plan)
    trace = ExecutionTrace()
    finish_order: dict[int, int] = {}
    step = [0]
    blocked: set[int] = set()

    for node_id in topo_order(result_plan):
        node = result_plan.node(node_id)
        if node_id in blocked:
            node.status = NodeStatus.FAILED_UPSTREAM
            record = NodeRecord(node_id=node_id, agent=node.agent)
            record.transitions.append((NodeStatus.FAILED_UPSTREAM.value, step[0]))
            step[0] += 1
            trace.records.append(record)
            continue
        node.status = NodeStatus.PENDING
        try:
            _run_node(result_plan, node, registry, lm, trace, finish_order, step)
        except NodeFailure:
            blocked.update(dependents(result_plan, node_id))

    trace.final_answer = extract_final_answer(result_plan)
    return result_plan, trace


def execute_node(
    plan: PlanGraph, node_id: int, registry: Registry, lm: Any = None
) -> tuple[PlanGraph, NodeRecord]:
    """Run exactly one node; its dependents become stale, keeping their old
    outputs flagged for re-use inspection.
    """
    if not plan.has_node(node_id):
        raise UnknownNode(node_id)
    result_plan = copy.deepcopy(plan)
    node = result_plan.node(node_id)
    trace = ExecutionTrace()

    finish_order: dict[int, int] = {}
    step = [0]
    _run_node(result_plan, node, registry, lm, trace, finish_order, step)

    for dep_id in dependents(result_plan, node_id):
        dep = result_plan.node(dep_id)
        if dep.status.is_done_like():
            dep.status = NodeStatus.STALE
    return result_plan, trace.records[0]


def mark_stale(plan: PlanGraph, node_id: int, include_self: bool = True) -> PlanGraph:
    """Flag a node (optionally) and its dependents as stale. Nodes without a
    usable result stay in their current status.
    """
    result_plan = copy.deepcopy(plan)
    targets = dependents(result_plan, node_id)
    if include_self:
        targets = targets | {node_id}
    for target in targets:
        node = result_plan.node(target)
        if node.status.is_done_like():
            node.status = NodeStatus.STALE
    return result_plan


def resume_stale(
    plan: PlanGraph, registry: Registry, lm: Any = None
) -> tuple[PlanGraph, ExecutionTrace]:
    """Re-execute exactly the stale and failed-upstream nodes, in dependency
    order, reusing finished nodes' outputs. A no-op on a clean plan.
    """
    result_plan = copy.deepcopy(plan)
    trace = ExecutionTrace()
    to_run = {
        n.id
        for n in result_plan.nodes
        if n.status in (NodeStatus.STALE, NodeStatus.FAILED_UPSTREAM)
    }
    if not to_run:
        return result_plan, trace

    finish_order: dict[int, int] = {}
    step = [0]
    blocked: set[int] = set()
    for node_id in topo_order(result_plan):
        if node_id not in to_run:
            continue
        node = result_plan.node(node_id)
        if node_id in blocked:
            node.status = NodeStatus.FAILED_UPSTREAM
            record = NodeRecord(node_id=node_id, agent=node.agent)
            record.transitions.append((NodeStatus.FAILED_UPSTREAM.value, step[0]))
            step[0] += 1
            trace.records.append(record)
            continue
        try:
            _run_node(result_plan, node, registry, lm, trace, finish_order, step)
        except NodeFailure:
            blocked.update(dependents(result_plan, node_id))

    trace.final_answer = extract_final_answer(result_plan)
    return result_plan, trace


def override_output(
    plan: PlanGraph, node_id: int, output: str, value: Value
) -> tuple[PlanGraph, OverrideRecord]:
    """Manually set an output value without running the node. The node counts
    as done (overridden) and its dependents become stale.
    """
    if not plan.has_node(node_id):
        raise UnknownNode(node_id)
    result_plan = copy.deepcopy(plan)
    node = result_plan.node(node_id)
    slot = node.find_output(output)
    if slot is None:
        raise UnknownOutput(node_id, output)
    record = OverrideRecord(node_id=node_id, output=output, value=value, supersedes=slot.value)
    slot.value = copy.deepcopy(value)
    node.status = NodeStatus.DONE_OVERRIDDEN
    for dep_id in dependents(result_plan, node_id):
        dep = result_plan.node(dep_id)
        if dep.status.is_done_like():
            dep.status = NodeStatus.STALE
    return result_plan, record


def answers_match(answer: Value, gold: Value, rel_tol: float = 1e-6) -> bool:
    """Numeric answers compare with relative tolerance; lists element-wise;
    anything else by trimmed case-insensitive text.
    """
    import math

    def as_number(v: Value) -> float | None:
        if isinstance(v, bool):
            return None
        if isinstance(v, (int, float)):
            return float(v)
        if isinstance(v, str):
            try:
                return float(v.strip())
            except ValueError:
                return None
        return None

    if isinstance(answer, list) or isinstance(gold, list):
        if not isinstance(answer, list) or not isinstance(gold, list):
            return False
        return len(answer) == len(gold) and all(
            answers_match(a, g, rel_tol) for a, g in zip(answer, gold)
        )
    a_num, g_num = as_number(answer), as_number(gold)
    if a_num is not None and g_num is not None:
        return math.isclose(a_num, g_num, rel_tol=rel_tol, abs_tol=0.0)
    return str(answer).strip().casefold() == str(gold).strip().casefold()
