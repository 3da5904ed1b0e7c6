"""Plan graph model: task nodes, data-flow edges, wire codec, validation.

The wire format is UTF-8 JSON::

    {"query": str,
     "nodes": [{"id": int, "name": str, "task": str,
                "input": [[str, value|null], ...], "output": [str, ...],
                "config": {...}, "status": str, "results": {name: value}}],
     "edges": [{"src_node": int, "dest_node": int,
                "src_output": str, "dest_input": str}]}

``config``/``status``/``results`` are optional on input. Slot values are
JSON scalars or lists of scalars.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable

from planweave.errors import CycleError, MalformedPlan, SchemaViolation, UnknownNode

Value = Any  # None | int | float | str | list of scalars

_FENCE_RE = re.compile(r"```(?:[A-Za-z0-9_-]+)?\s*\n(.*?)```", re.DOTALL)


class NodeStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    DONE = "done"
    FAILED = "failed"
    STALE = "stale"
    FAILED_UPSTREAM = "failed_upstream"
    DONE_OVERRIDDEN = "done_overridden"

    def is_done_like(self) -> bool:
        """True when the node's outputs are usable downstream."""
        return self in (NodeStatus.DONE, NodeStatus.DONE_OVERRIDDEN, NodeStatus.STALE)


@dataclass
class InputSlot:
    """One named input of a task node.

    The wire format carries a single string per input; it serves as both
    the slot name (edges reference it) and its human description.
    """

    name: str
    description: str = ""
    value: Value = None

    def __post_init__(self) -> None:
        if not self.description:
            self.description = self.name


@dataclass
class OutputSlot:
    name: str
    value: Value = None


@dataclass
class TaskNode:
    id: int
    agent: str
    task: str
    inputs: list[InputSlot] = field(default_factory=list)
    outputs: list[OutputSlot] = field(default_factory=list)
    config: dict[str, Value] = field(default_factory=dict)
    status: NodeStatus = NodeStatus.PENDING

    def input_names(self) -> list[str]:
        return [s.name for s in self.inputs]

    def output_names(self) -> list[str]:
        return [s.name for s in self.outputs]

    def find_input(self, name: str) -> InputSlot | None:
        for s in self.inputs:
            if s.name == name:
                return s
        return None

    def find_output(self, name: str) -> OutputSlot | None:
        for s in self.outputs:
            if s.name == name:
                return s
        return None


@dataclass(frozen=True)
class DataEdge:
    src_node: int
    dest_node: int
    src_output: str
    dest_input: str

    def quad(self) -> tuple[int, int, str, str]:
        return (self.src_node, self.dest_node, self.src_output, self.dest_input)


@dataclass
class PlanGraph:
    """A DAG of agent-assigned tasks. Treated as an immutable value; all
    mutation helpers live in :mod:`planweave.edits` and return new graphs.

    Nodes are kept sorted by id and edges by quadruple so that equal plans
    have equal field values regardless of construction order.
    """

    query: str = ""
    nodes: list[TaskNode] = field(default_factory=list)
    edges: list[DataEdge] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.nodes.sort(key=lambda n: n.id)
        self.edges.sort(key=lambda e: e.quad())

    def node(self, node_id: int) -> TaskNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise UnknownNode(node_id)

    def has_node(self, node_id: int) -> bool:
        return any(n.id == node_id for n in self.nodes)

    def node_ids(self) -> list[int]:
        return [n.id for n in self.nodes]

    def in_edges(self, node_id: int) -> list[DataEdge]:
        return [e for e in self.edges if e.dest_node == node_id]

    def out_edges(self, node_id: int) -> list[DataEdge]:
        return [e for e in self.edges if e.src_node == node_id]

    def sinks(self) -> list[int]:
        with_out = {e.src_node for e in self.edges}
        return [n.id for n in self.nodes if n.id not in with_out]

    def edge_pairs(self) -> set[tuple[int, int]]:
        """Directed (src, dest) pairs with parallel edges collapsed."""
        return {(e.src_node, e.dest_node) for e in self.edges}


@dataclass
class ValidationIssue:
    code: str
    locus: str
    message: str


@dataclass
class ValidationReport:
    errors: list[ValidationIssue] = field(default_factory=list)
    warnings: list[ValidationIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def codes(self) -> set[str]:
        return {i.code for i in self.errors} | {i.code for i in self.warnings}

    def summary(self) -> str:
        lines = [f"{len(self.errors)} errors, {len(self.warnings)} warnings"]
        for issue in self.errors:
            lines.append(f"ERROR   {issue.code:<16} {issue.locus}: {issue.message}")
        for issue in self.warnings:
            lines.append(f"WARNING {issue.code:<16} {issue.locus}: {issue.message}")
        return "\n".join(lines)


# --- wire codec ----------------------------------------------------------


def _strip_wrapping(text: str) -> str:
    """Drop markdown fences and surrounding prose, keeping the JSON body."""
    match = _FENCE_RE.search(text)
    if match:
        return match.group(1).strip()
    start = text.find("{")
    if start < 0:
        return text.strip()
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    return text[start:].strip()


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise SchemaViolation(message)


_SCALARS = (str, int, float, bool)


def _check_value(value: Any, where: str) -> Value:
    if value is None or isinstance(value, _SCALARS):
        return value
    if isinstance(value, list):
        for item in value:
            _require(
                item is None or isinstance(item, _SCALARS),
                f"{where}: list values must hold scalars",
            )
        return value
    raise SchemaViolation(f"{where}: unsupported value type {type(value).__name__}")


def _decode_node(raw: Any, index: int) -> TaskNode:
    where = f"nodes[{index}]"
    _require(isinstance(raw, dict), f"{where} must be an object")
    _require("id" in raw, f"{where} missing id")
    _require(isinstance(raw["id"], int) and not isinstance(raw["id"], bool), f"{where}.id must be an integer")
    _require(isinstance(raw.get("name"), str), f"{where}.name must be a string")
    _require(isinstance(raw.get("task", ""), str), f"{where}.task must be a string")

    inputs: list[InputSlot] = []
    for j, item in enumerate(raw.get("input", [])):
        slot_where = f"{where}.input[{j}]"
        if isinstance(item, str):
            inputs.append(InputSlot(name=item))
            continue
        _require(
            isinstance(item, (list, tuple)) and len(item) == 2,
            f"{slot_where} must be a [name, value] pair",
        )
        name, value = item
        _require(isinstance(name, str), f"{slot_where} name must be a string")
        inputs.append(InputSlot(name=name, value=_check_value(value, slot_where)))

    outputs: list[OutputSlot] = []
    results = raw.get("results", {})
    _require(isinstance(results, dict), f"{where}.results must be an object")
    for j, item in enumerate(raw.get("output", [])):
        _require(isinstance(item, str), f"{where}.output[{j}] must be a string")
        outputs.append(
            OutputSlot(name=item, value=_check_value(results.get(item), f"{where}.results[{item}]"))
        )

    config = raw.get("config", {})
    _require(isinstance(config, dict), f"{where}.config must be an object")

    status_raw = raw.get("status", NodeStatus.PENDING.value)
    try:
        status = NodeStatus(status_raw)
    except ValueError:
        raise SchemaViolation(f"{where}.status: unknown status {status_raw!r}") from None

    return TaskNode(
        id=raw["id"],
        agent=raw["name"],
        task=raw.get("task", ""),
        inputs=inputs,
        outputs=outputs,
        config=dict(config),
        status=status,
    )


def _decode_edge(raw: Any, index: int) -> DataEdge:
    where = f"edges[{index}]"
    _require(isinstance(raw, dict), f"{where} must be an object")
    for key in ("src_node", "dest_node", "src_output", "dest_input"):
        _require(key in raw, f"{where} missing {key}")
    _require(isinstance(raw["src_node"], int), f"{where}.src_node must be an integer")
    _require(isinstance(raw["dest_node"], int), f"{where}.dest_node must be an integer")
    _require(isinstance(raw["src_output"], str), f"{where}.src_output must be a string")
    _require(isinstance(raw["dest_input"], str), f"{where}.dest_input must be a string")
    return DataEdge(raw["src_node"], raw["dest_node"], raw["src_output"], raw["dest_input"])


def parse_plan(text: str) -> PlanGraph:
    """Decode the wire format, tolerating code fences and surrounding prose."""
    body = _strip_wrapping(text)
    try:
        raw = json.loads(body)
    except (json.JSONDecodeError, TypeError) as exc:
        raise MalformedPlan(f"could not decode plan: {exc}") from exc
    if not isinstance(raw, dict):
        raise MalformedPlan("plan payload is not a JSON object")
    _require("nodes" in raw, "missing nodes key")
    _require("edges" in raw, "missing edges key")
    _require(isinstance(raw["nodes"], list), "nodes must be an array")
    _require(isinstance(raw["edges"], list), "edges must be an array")
    query = raw.get("query", "")
    _require(isinstance(query, str), "query must be a string")
    nodes = [_decode_node(n, i) for i, n in enumerate(raw["nodes"])]
    edges = [_decode_edge(e, i) for i, e in enumerate(raw["edges"])]
    return PlanGraph(query=query, nodes=nodes, edges=edges)


def _encode_node(node: TaskNode) -> dict[str, Any]:
    results = {s.name: s.value for s in node.outputs if s.value is not None}
    return {
        "id": node.id,
        "name": node.agent,
        "task": node.task,
        "input": [[s.name, s.value] for s in node.inputs],
        "output": [s.name for s in node.outputs],
        "config": node.config,
        "status": node.status.value,
        "results": results,
    }


def serialize_plan(plan: PlanGraph, indent: int | None = 2) -> str:
    """Emit the canonical wire format: nodes sorted by id, edges by quadruple."""
    payload = {
        "query": plan.query,
        "nodes": [_encode_node(n) for n in sorted(plan.nodes, key=lambda n: n.id)],
        "edges": [
            {
                "src_node": e.src_node,
                "dest_node": e.dest_node,
                "src_output": e.src_output,
                "dest_input": e.dest_input,
            }
            for e in sorted(plan.edges, key=lambda e: e.quad())
        ],
    }
    return json.dumps(payload, indent=indent, ensure_ascii=False)


# --- structural queries ---------------------------------------------------


def topo_order(plan: PlanGraph) -> list[int]:
    """Topological order of node ids; ready nodes are drained lowest id first."""
    ids = plan.node_ids()
    indegree = {i: 0 for i in ids}
    successors: dict[int, set[int]] = {i: set() for i in ids}
    for src, dest in plan.edge_pairs():
        if src not in indegree or dest not in indegree:
            continue  # dangling edges are validate()'s problem, not ordering's
        if dest not in successors[src]:
            successors[src].add(dest)
            indegree[dest] += 1

    import heapq

    ready = [i for i in ids if indegree[i] == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        current = heapq.heappop(ready)
        order.append(current)
        for nxt in sorted(successors[current]):
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                heapq.heappush(ready, nxt)
    if len(order) != len(ids):
        raise CycleError(_find_cycle(plan))
    return order


def _find_cycle(plan: PlanGraph) -> list[int]:
    """Return one directed cycle's node ids (for error reporting)."""
    successors: dict[int, list[int]] = {i: [] for i in plan.node_ids()}
    for src, dest in sorted(plan.edge_pairs()):
        if src in successors and dest in successors:
            successors[src].append(dest)
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {i: WHITE for i in successors}
    stack: list[int] = []

    def visit(node: int) -> list[int] | None:
        color[node] = GRAY
        stack.append(node)
        for nxt in successors[node]:
            if color[nxt] == GRAY:
                return stack[stack.index(nxt) :]
            if color[nxt] == WHITE:
                found = visit(nxt)
                if found is not None:
                    return found
        stack.pop()
        color[node] = BLACK
        return None

    for start in sorted(successors):
        if color[start] == WHITE:
            found = visit(start)
            if found is not None:
                return found
    return []


def dependents(plan: PlanGraph, node_id: int) -> set[int]:
    """Transitive successors of ``node_id``, excluding the node itself."""
    if not plan.has_node(node_id):
        raise UnknownNode(node_id)
    ids = set(plan.node_ids())
    successors: dict[int, set[int]] = {}
    for src, dest in plan.edge_pairs():
        if src in ids and dest in ids:
            successors.setdefault(src, set()).add(dest)
    seen: set[int] = set()
    frontier = [node_id]
    while frontier:
        current = frontier.pop()
        for nxt in successors.get(current, ()):
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


def validate(plan: PlanGraph, registry: "Registry") -> ValidationReport:  # noqa: F821
    """Check every structural invariant against the registry.

    Problems are report entries, never exceptions. Empty ``errors`` means
    the plan is executable against the given registry.
    """
    report = ValidationReport()
    err = report.errors.append
    warn = report.warnings.append

    seen_ids: set[int] = set()
    for node in plan.nodes:
        locus = f"node {node.id}"
        if node.id in seen_ids:
            err(ValidationIssue("DUPLICATE_ID", locus, "node id declared twice"))
        seen_ids.add(node.id)
        if node.id < 0:
            err(ValidationIssue("NEGATIVE_ID", locus, "node ids must be non-negative"))
        if not registry.has(node.agent):
            err(ValidationIssue("UNKNOWN_AGENT", locus, f"agent {node.agent!r} not in registry"))
        in_names = node.input_names()
        if len(set(in_names)) != len(in_names):
            err(ValidationIssue("DUPLICATE_PORT", locus, "duplicate input slot name"))
        out_names = node.output_names()
        if len(set(out_names)) != len(out_names):
            err(ValidationIssue("DUPLICATE_PORT", locus, "duplicate output slot name"))
        if node.status is NodeStatus.DONE:
            missing = [s.name for s in node.outputs if s.value is None]
            if missing:
                warn(ValidationIssue("DONE_WITHOUT_OUTPUT", locus, f"status done but outputs {missing} empty"))

    ids = set(plan.node_ids())
    seen_quads: set[tuple[int, int, str, str]] = set()
    fed_inputs: dict[tuple[int, str], int] = {}
    for edge in plan.edges:
        locus = f"edge {edge.src_node}.{edge.src_output} -> {edge.dest_node}.{edge.dest_input}"
        if edge.quad() in seen_quads:
            err(ValidationIssue("DUPLICATE_EDGE", locus, "edge declared twice"))
        seen_quads.add(edge.quad())
        if edge.src_node == edge.dest_node:
            err(ValidationIssue("SELF_EDGE", locus, "edge endpoints must differ"))
        dangling = False
        for endpoint in (edge.src_node, edge.dest_node):
            if endpoint not in ids:
                err(ValidationIssue("DANGLING_EDGE", locus, f"node {endpoint} does not exist"))
                dangling = True
        if dangling:
            continue
        src = plan.node(edge.src_node)
        dest = plan.node(edge.dest_node)
        if src.find_output(edge.src_output) is None:
            err(ValidationIssue("UNKNOWN_PORT", locus, f"node {src.id} has no output {edge.src_output!r}"))
        if dest.find_input(edge.dest_input) is None:
            err(ValidationIssue("UNKNOWN_PORT", locus, f"node {dest.id} has no input {edge.dest_input!r}"))
        key = (edge.dest_node, edge.dest_input)
        fed_inputs[key] = fed_inputs.get(key, 0) + 1

    for (node_id, port), count in sorted(fed_inputs.items()):
        if count > 1:
            warn(
                ValidationIssue(
                    "FANIN_INPUT",
                    f"node {node_id}",
                    f"input {port!r} fed by {count} edges; latest-finishing source wins",
                )
            )

    try:
        topo_order(plan)
    except CycleError as exc:
        err(ValidationIssue("CYCLE", "plan", f"cycle through nodes {exc.cycle}"))

    for node in plan.nodes:
        fed = {e.dest_input for e in plan.in_edges(node.id)}
        for slot in node.inputs:
            if slot.value is None and slot.name not in fed:
                warn(
                    ValidationIssue(
                        "UNBOUND_INPUT",
                        f"node {node.id}",
                        f"input {slot.name!r} has neither a value nor a feeding edge",
                    )
                )

    if len(plan.nodes) < 2:
        warn(ValidationIssue("TOO_FEW_NODES", "plan", f"plan has {len(plan.nodes)} node(s); expected at least 2"))

    return report


def structurally_equal(a: PlanGraph, b: PlanGraph) -> bool:
    """Equality on plan structure: ids, agents, tasks, ports, bound input
    values, configs, and the edge set. Status and results are execution
    state and do not participate.
    """
    if sorted(a.node_ids()) != sorted(b.node_ids()):
        return False
    for node_a in a.nodes:
        node_b = b.node(node_a.id)
        if node_a.agent != node_b.agent or node_a.task != node_b.task:
            return False
        if [(s.name, s.value) for s in node_a.inputs] != [(s.name, s.value) for s in node_b.inputs]:
            return False
        if node_a.output_names() != node_b.output_names():
            return False
        if node_a.config != node_b.config:
            return False
    return {e.quad() for e in a.edges} == {e.quad() for e in b.edges}


def iter_slots(plan: PlanGraph) -> Iterable[tuple[TaskNode, InputSlot]]:
    for node in plan.nodes:
        for slot in node.inputs:
            yield node, slot
