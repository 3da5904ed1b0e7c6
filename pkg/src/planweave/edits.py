"""Direct-manipulation plan edits: a closed operation vocabulary shared by
the service API, the UI, and the evaluation harness, plus a structural diff.

Every operation is a pure function from plan to plan. Removing a node also
removes its incident edges; removing a port removes edges bound to it; any
edit flags the touched node's finished dependents as stale.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any

from planweave.errors import (
    DuplicateEdge,
    DuplicateNode,
    DuplicatePort,
    PlanweaveError,
    UnknownEdge,
    UnknownNode,
    UnknownPort,
    WouldCreateCycle,
)
from planweave.plan import (
    DataEdge,
    InputSlot,
    NodeStatus,
    OutputSlot,
    PlanGraph,
    TaskNode,
    Value,
    dependents,
)

EDIT_KINDS = (
    "add_node",
    "remove_node",
    "add_edge",
    "remove_edge",
    "set_task",
    "set_agent",
    "set_config",
    "add_input",
    "remove_input",
    "add_output",
    "remove_output",
    "set_input_value",
)


@dataclass(frozen=True)
class EditOp:
    kind: str
    payload: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in EDIT_KINDS:
            raise ValueError(f"unknown edit kind {self.kind!r}")

    def to_wire(self) -> dict[str, Any]:
        return {"kind": self.kind, **self.payload}

    @classmethod
    def from_wire(cls, raw: dict[str, Any]) -> "EditOp":
        payload = {k: v for k, v in raw.items() if k != "kind"}
        return cls(kind=raw.get("kind", ""), payload=payload)


@dataclass
class EditScript:
    ops: list[EditOp] = field(default_factory=list)
    provenance: str = "user_graph_edit"  # | harness_corruption | harness_dm_feedback

    def __len__(self) -> int:
        return len(self.ops)


def next_node_id(plan: PlanGraph) -> int:
    return max((n.id for n in plan.nodes), default=-1) + 1


def _stale_dependents(plan: PlanGraph, node_id: int, include_self: bool = True) -> None:
    targets = dependents(plan, node_id) if plan.has_node(node_id) else set()
    if include_self and plan.has_node(node_id):
        targets = targets | {node_id}
    for target in targets:
        node = plan.node(target)
        if node.status.is_done_like():
            node.status = NodeStatus.STALE


def _would_cycle(plan: PlanGraph, src: int, dest: int) -> bool:
    if src == dest:
        return True
    return src in dependents(plan, dest)


def _node_from_payload(payload: dict[str, Any], plan: PlanGraph) -> TaskNode:
    node_id = payload.get("id")
    if node_id is None:
        node_id = next_node_id(plan)
    if plan.has_node(node_id):
        raise DuplicateNode(node_id)
    inputs = []
    for item in payload.get("input", []):
        if isinstance(item, str):
            inputs.append(InputSlot(name=item))
        else:
            name, value = item
            inputs.append(InputSlot(name=name, value=value))
    outputs = [OutputSlot(name=name) for name in payload.get("output", [])]
    return TaskNode(
        id=node_id,
        agent=payload.get("agent", payload.get("name", "")),
        task=payload.get("task", ""),
        inputs=inputs,
        outputs=outputs,
        config=dict(payload.get("config", {})),
    )


def apply_edit(plan: PlanGraph, op: EditOp) -> PlanGraph:
    """Apply one edit, returning the new plan. Raises on bad loci; never
    leaves a dangling reference behind.
    """
    result = copy.deepcopy(plan)
    payload = op.payload

    if op.kind == "add_node":
        node = _node_from_payload(payload, result)
        result.nodes.append(node)
        result.nodes.sort(key=lambda n: n.id)
        return result

    if op.kind == "add_edge":
        quad = (payload["src_node"], payload["dest_node"], payload["src_output"], payload["dest_input"])
        edge = DataEdge(*quad)
        for endpoint in (edge.src_node, edge.dest_node):
            if not result.has_node(endpoint):
                raise UnknownNode(endpoint)
        if result.node(edge.src_node).find_output(edge.src_output) is None:
            raise UnknownPort(edge.src_node, edge.src_output)
        if result.node(edge.dest_node).find_input(edge.dest_input) is None:
            raise UnknownPort(edge.dest_node, edge.dest_input)
        if any(e.quad() == quad for e in result.edges):
            raise DuplicateEdge(quad)
        if _would_cycle(result, edge.src_node, edge.dest_node):
            raise WouldCreateCycle(edge.src_node, edge.dest_node)
        result.edges.append(edge)
        result.edges.sort(key=lambda e: e.quad())
        _stale_dependents(result, edge.dest_node)
        return result

    if op.kind == "remove_edge":
        quad = (payload["src_node"], payload["dest_node"], payload["src_output"], payload["dest_input"])
        before = len(result.edges)
        result.edges = [e for e in result.edges if e.quad() != quad]
        if len(result.edges) == before:
            raise UnknownEdge(quad)
        if result.has_node(quad[1]):
            _stale_dependents(result, quad[1])
        return result

    if op.kind == "remove_node":
        node_id = payload["node"]
        if not result.has_node(node_id):
            raise UnknownNode(node_id)
        _stale_dependents(result, node_id, include_self=False)
        result.nodes = [n for n in result.nodes if n.id != node_id]
        result.edges = [e for e in result.edges if node_id not in (e.src_node, e.dest_node)]
        return result

    # remaining kinds address one existing node
    node_id = payload["node"]
    if not result.has_node(node_id):
        raise UnknownNode(node_id)
    node = result.node(node_id)

    if op.kind == "set_task":
        node.task = payload["task"]
    elif op.kind == "set_agent":
        node.agent = payload["agent"]
    elif op.kind == "set_config":
        node.config = dict(payload["config"])
    elif op.kind == "add_input":
        name = payload["name"]
        if node.find_input(name) is not None:
            raise DuplicatePort(node_id, name)
        node.inputs.append(InputSlot(name=name, value=payload.get("value")))
    elif op.kind == "remove_input":
        name = payload["name"]
        if node.find_input(name) is None:
            raise UnknownPort(node_id, name)
        node.inputs = [s for s in node.inputs if s.name != name]
        result.edges = [
            e for e in result.edges if not (e.dest_node == node_id and e.dest_input == name)
        ]
    elif op.kind == "add_output":
        name = payload["name"]
        if node.find_output(name) is not None:
            raise DuplicatePort(node_id, name)
        node.outputs.append(OutputSlot(name=name, value=payload.get("value")))
    elif op.kind == "remove_output":
        name = payload["name"]
        if node.find_output(name) is None:
            raise UnknownPort(node_id, name)
        node.outputs = [s for s in node.outputs if s.name != name]
        result.edges = [
            e for e in result.edges if not (e.src_node == node_id and e.src_output == name)
        ]
    elif op.kind == "set_input_value":
        name = payload["name"]
        slot = node.find_input(name)
        if slot is None:
            raise UnknownPort(node_id, name)
        slot.value = payload.get("value")
    else:  # pragma: no cover - guarded by EditOp.__post_init__
        raise ValueError(f"unknown edit kind {op.kind!r}")

    _stale_dependents(result, node_id)
    return result


def apply_script(plan: PlanGraph, script: EditScript) -> PlanGraph:
    """Fold of ``apply_edit``. Atomic: the first failure propagates with its
    op index attached and the base plan is left untouched.
    """
    current = plan
    for index, op in enumerate(script.ops):
        try:
            current = apply_edit(current, op)
        except PlanweaveError as exc:
            exc.op_index = index  # type: ignore[attr-defined]
            raise
    return current


def _node_wire(node: TaskNode) -> dict[str, Any]:
    return {
        "id": node.id,
        "agent": node.agent,
        "task": node.task,
        "input": [[s.name, s.value] for s in node.inputs],
        "output": [s.name for s in node.outputs],
        "config": node.config,
    }


def diff(base: PlanGraph, target: PlanGraph) -> EditScript:
    """An edit script turning ``base`` into ``target`` structurally.

    Nodes match strictly by id; agent, task, config, ports (with bound input
    values), and edges are reconciled. Status and results are execution
    state and are not reproduced.
    """
    ops: list[EditOp] = []
    base_ids = set(base.node_ids())
    target_ids = set(target.node_ids())

    target_edges = {e.quad() for e in target.edges}
    for edge in base.edges:
        if edge.quad() not in target_edges:
            src, dest, src_output, dest_input = edge.quad()
            ops.append(
                EditOp(
                    "remove_edge",
                    {"src_node": src, "dest_node": dest, "src_output": src_output, "dest_input": dest_input},
                )
            )

    for node_id in sorted(base_ids - target_ids):
        ops.append(EditOp("remove_node", {"node": node_id}))

    # port removal cascades bound edges, so any surviving edge touching a
    # rebuilt port must be re-added afterwards
    reattach: set[tuple[int, int, str, str]] = set()
    base_edges = {e.quad() for e in base.edges}
    kept_edges = base_edges & target_edges

    for node_id in sorted(base_ids & target_ids):
        node_b = base.node(node_id)
        node_t = target.node(node_id)
        if node_b.agent != node_t.agent:
            ops.append(EditOp("set_agent", {"node": node_id, "agent": node_t.agent}))
        if node_b.task != node_t.task:
            ops.append(EditOp("set_task", {"node": node_id, "task": node_t.task}))
        if node_b.config != node_t.config:
            ops.append(EditOp("set_config", {"node": node_id, "config": node_t.config}))

        # input slots are order-significant: keep the longest common name
        # prefix, rebuild the rest in target order
        b_in, t_in = node_b.inputs, node_t.inputs
        prefix = 0
        while prefix < len(b_in) and prefix < len(t_in) and b_in[prefix].name == t_in[prefix].name:
            prefix += 1
        for slot in b_in[prefix:]:
            ops.append(EditOp("remove_input", {"node": node_id, "name": slot.name}))
            reattach.update(
                q for q in kept_edges if q[1] == node_id and q[3] == slot.name
            )
        for slot in t_in[prefix:]:
            ops.append(EditOp("add_input", {"node": node_id, "name": slot.name, "value": slot.value}))
        for b_slot, t_slot in zip(b_in[:prefix], t_in[:prefix]):
            if b_slot.value != t_slot.value:
                ops.append(
                    EditOp("set_input_value", {"node": node_id, "name": t_slot.name, "value": t_slot.value})
                )

        b_out, t_out = node_b.output_names(), node_t.output_names()
        prefix = 0
        while prefix < len(b_out) and prefix < len(t_out) and b_out[prefix] == t_out[prefix]:
            prefix += 1
        for name in b_out[prefix:]:
            ops.append(EditOp("remove_output", {"node": node_id, "name": name}))
            reattach.update(q for q in kept_edges if q[0] == node_id and q[2] == name)
        for name in t_out[prefix:]:
            ops.append(EditOp("add_output", {"node": node_id, "name": name}))

    for node_id in sorted(target_ids - base_ids):
        ops.append(EditOp("add_node", _node_wire(target.node(node_id))))

    for edge in sorted((target_edges - base_edges) | reattach):
        src, dest, src_output, dest_input = edge
        ops.append(
            EditOp(
                "add_edge",
                {"src_node": src, "dest_node": dest, "src_output": src_output, "dest_input": dest_input},
            )
        )

    return EditScript(ops=ops, provenance="user_graph_edit")
