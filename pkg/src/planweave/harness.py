"""Plan-refinement benchmark: corrupt a gold plan with one seeded operation,
synthesize feedback in three formats, refine, and score the result.

Feedback formats: ``detailed`` and ``vague`` fill natural-language templates
from the corruption record; ``dm_fix`` builds a direct-manipulation edit
script - the exact inverse for the four simple corruption kinds, a partial
inverse plus a model fix pass for node removal and slot changes.
"""

from __future__ import annotations

import hashlib
import json
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from planweave.agents import Registry
from planweave.edits import EditOp, EditScript, apply_script, next_node_id
from planweave.errors import InapplicableKind, PlanweaveError
from planweave.executor import answers_match, execute_all, extract_final_answer
from planweave.metrics import MetricTriple, execution_accuracy_detail, ged, is_isomorphic
from planweave.plan import (
    DataEdge,
    PlanGraph,
    TaskNode,
    Value,
    dependents,
    parse_plan,
    serialize_plan,
)
from planweave.planner import fix_plan, refine_plan

CORRUPTION_KINDS = (
    "remove_node",
    "add_node",
    "remove_edge",
    "add_edge",
    "wrong_agent",
    "io_change",
)

# corruption kinds whose dm_fix script is the exact inverse (no model pass)
SIMPLE_KINDS = ("add_node", "remove_edge", "add_edge", "wrong_agent")

FEEDBACK_MODES = ("detailed", "vague", "dm_fix")

DATASETS = ("gsm8k-style", "multistep-style")

# Table-style display names: the refinement operation each corruption demands
KIND_DISPLAY = {
    "remove_node": "Add Node",
    "add_node": "Remove Node",
    "remove_edge": "Add Edge",
    "add_edge": "Remove Edge",
    "wrong_agent": "Modify (Agent)",
    "io_change": "Modify (I/O)",
}


@dataclass
class GoldCase:
    id: str
    query: str
    gold_plan: PlanGraph
    gold_answer: Value
    dataset: str

    @classmethod
    def from_wire(cls, raw: dict[str, Any]) -> "GoldCase":
        return cls(
            id=raw["id"],
            query=raw["query"],
            gold_plan=parse_plan(json.dumps(raw["plan"])),
            gold_answer=raw["gold_answer"],
            dataset=raw["dataset"],
        )

    def to_wire(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "dataset": self.dataset,
            "query": self.query,
            "gold_answer": self.gold_answer,
            "plan": json.loads(serialize_plan(self.gold_plan)),
        }


def load_corpus(path: str | Path, registry: Registry) -> list[GoldCase]:
    """Read gold cases and enforce that every gold plan executes to its
    stated answer - the corpus is self-verifying."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    cases = [GoldCase.from_wire(entry) for entry in raw]
    seen: set[str] = set()
    for case in cases:
        if case.id in seen:
            raise ValueError(f"duplicate case id {case.id!r}")
        seen.add(case.id)
        if case.dataset not in DATASETS:
            raise ValueError(f"case {case.id}: unknown dataset {case.dataset!r}")
        executed, trace = execute_all(case.gold_plan, registry)
        answer = extract_final_answer(executed)
        if not answers_match(answer, case.gold_answer):
            raise ValueError(
                f"case {case.id}: gold plan executes to {answer!r}, expected {case.gold_answer!r}"
            )
    return cases


@dataclass
class CorruptionRecord:
    kind: str
    locus: dict[str, Any]
    inverse_hint: dict[str, Any]


@dataclass
class Feedback:
    mode: str
    text: str = ""
    script: EditScript | None = None
    fix_needed: bool = False


@dataclass
class CaseResult:
    case_id: str
    dataset: str
    kind: str
    mode: str
    metrics: MetricTriple
    refined: PlanGraph
    error: str | None = None
    acc_reason: str | None = None
    timing_s: float = 0.0


def case_seed(master_seed: int, case_id: str, kind: str) -> int:
    """Stable per-(case, kind) seed so adding cases never perturbs draws."""
    digest = hashlib.sha256(f"{master_seed}:{case_id}:{kind}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _node_wire(node: TaskNode) -> dict[str, Any]:
    return {
        "id": node.id,
        "agent": node.agent,
        "task": node.task,
        "input": [[s.name, s.value] for s in node.inputs],
        "output": [s.name for s in node.outputs],
        "config": dict(node.config),
    }


def _single_pair_edges(plan: PlanGraph) -> list[DataEdge]:
    """Edges whose endpoint pair carries no parallel edge; removing one is
    always visible to the isomorphism check."""
    pair_count: dict[tuple[int, int], int] = {}
    for edge in plan.edges:
        pair = (edge.src_node, edge.dest_node)
        pair_count[pair] = pair_count.get(pair, 0) + 1
    return [e for e in plan.edges if pair_count[(e.src_node, e.dest_node)] == 1]


def corrupt(
    gold: GoldCase, kind: str, seed: int, registry: Registry
) -> tuple[PlanGraph, CorruptionRecord]:
    """Apply one seeded corruption of ``kind`` to the gold plan.

    Every kind is engineered to break labeled isomorphism with the gold
    plan, so the corruption is always detectable by the metrics.
    """
    plan = gold.gold_plan
    rng = random.Random(seed)

    if kind == "remove_node":
        sinks = set(plan.sinks())
        candidates = sorted(n.id for n in plan.nodes if n.id not in sinks)
        if not candidates:
            raise InapplicableKind(kind, "no non-sink node to remove")
        target = rng.choice(candidates)
        node = plan.node(target)
        incident = [e.quad() for e in plan.edges if target in (e.src_node, e.dest_node)]
        prev_ids = sorted({e.src_node for e in plan.in_edges(target)})
        next_ids = sorted({e.dest_node for e in plan.out_edges(target)})
        script = EditScript([EditOp("remove_node", {"node": target})], "harness_corruption")
        corrupted = apply_script(plan, script)
        record = CorruptionRecord(
            kind=kind,
            locus={"node": target},
            inverse_hint={
                "node": _node_wire(node),
                "edges": incident,
                "prev": prev_ids,
                "next": next_ids,
            },
        )
        return corrupted, record

    if kind == "add_node":
        sources = [
            (n.id, out.name) for n in plan.nodes for out in n.outputs
        ]
        if not sources:
            raise InapplicableKind(kind, "no output to wire a distractor from")
        src_id, src_output = rng.choice(sorted(sources))
        agent = registry.get(rng.choice(sorted(registry.names())))
        new_id = next_node_id(plan)
        payload = {
            "id": new_id,
            "agent": agent.name,
            "task": f"Apply {agent.name} to the intermediate value.",
            "input": [[name, None] for name, _ in agent.inputs],
            "output": [name for name, _ in agent.outputs],
        }
        dest_input = agent.inputs[0][0]
        script = EditScript(
            [
                EditOp("add_node", payload),
                EditOp(
                    "add_edge",
                    {
                        "src_node": src_id,
                        "dest_node": new_id,
                        "src_output": src_output,
                        "dest_input": dest_input,
                    },
                ),
            ],
            "harness_corruption",
        )
        corrupted = apply_script(plan, script)
        record = CorruptionRecord(
            kind=kind,
            locus={"node": new_id},
            inverse_hint={"node": new_id, "agent": agent.name},
        )
        return corrupted, record

    if kind == "remove_edge":
        candidates = _single_pair_edges(plan)
        if not candidates:
            raise InapplicableKind(kind, "no singly-paired edge to remove")
        edge = rng.choice(sorted(candidates, key=lambda e: e.quad()))
        src, dest, src_output, dest_input = edge.quad()
        script = EditScript(
            [EditOp("remove_edge", {"src_node": src, "dest_node": dest, "src_output": src_output, "dest_input": dest_input})],
            "harness_corruption",
        )
        corrupted = apply_script(plan, script)
        record = CorruptionRecord(
            kind=kind,
            locus={"edge": edge.quad()},
            inverse_hint={"edge": edge.quad(), "src": src, "dest": dest},
        )
        return corrupted, record

    if kind == "add_edge":
        pairs = plan.edge_pairs()
        candidates: list[tuple[int, int, str, str]] = []
        for src in plan.nodes:
            if not src.outputs:
                continue
            for dest in plan.nodes:
                if src.id == dest.id or not dest.inputs:
                    continue
                if (src.id, dest.id) in pairs:
                    continue
                if src.id in dependents(plan, dest.id):
                    continue  # would close a cycle
                candidates.append((src.id, dest.id, src.outputs[0].name, dest.inputs[0].name))
        if not candidates:
            raise InapplicableKind(kind, "no acyclic unlinked pair available")
        src_id, dest_id, src_output, dest_input = rng.choice(sorted(candidates))
        quad = (src_id, dest_id, src_output, dest_input)
        script = EditScript(
            [EditOp("add_edge", {"src_node": src_id, "dest_node": dest_id, "src_output": src_output, "dest_input": dest_input})],
            "harness_corruption",
        )
        corrupted = apply_script(plan, script)
        record = CorruptionRecord(
            kind=kind,
            locus={"edge": quad},
            inverse_hint={"edge": quad, "src": src_id, "dest": dest_id},
        )
        return corrupted, record

    if kind == "wrong_agent":
        target_node = rng.choice(sorted(plan.node_ids()))
        original = plan.node(target_node).agent
        others = sorted(name for name in registry.names() if name != original)
        if not others:
            raise InapplicableKind(kind, "registry has no alternative agent")
        replacement = rng.choice(others)
        script = EditScript(
            [EditOp("set_agent", {"node": target_node, "agent": replacement})],
            "harness_corruption",
        )
        corrupted = apply_script(plan, script)
        record = CorruptionRecord(
            kind=kind,
            locus={"node": target_node},
            inverse_hint={"node": target_node, "agent": original, "wrong agent": replacement},
        )
        return corrupted, record

    if kind == "io_change":
        candidates = _single_pair_edges(plan)
        if not candidates:
            raise InapplicableKind(kind, "no singly-paired edge whose slot can change")
        edge = rng.choice(sorted(candidates, key=lambda e: e.quad()))
        side = rng.choice(["input", "output"])
        rename = rng.random() < 0.5
        if side == "input":
            node_id, slot_name = edge.dest_node, edge.dest_input
            slot = plan.node(node_id).find_input(slot_name)
            assert slot is not None
            ops = [EditOp("remove_input", {"node": node_id, "name": slot_name})]
            new_name = None
            if rename:
                new_name = f"{slot_name}_x"
                ops.append(EditOp("add_input", {"node": node_id, "name": new_name, "value": slot.value}))
            hint = {
                "node": node_id,
                "side": side,
                "name": slot_name,
                "value": slot.value,
                "renamed_to": new_name,
                "edges": [edge.quad()],
            }
        else:
            node_id, slot_name = edge.src_node, edge.src_output
            ops = [EditOp("remove_output", {"node": node_id, "name": slot_name})]
            new_name = None
            if rename:
                new_name = f"{slot_name}_x"
                ops.append(EditOp("add_output", {"node": node_id, "name": new_name}))
            hint = {
                "node": node_id,
                "side": side,
                "name": slot_name,
                "value": None,
                "renamed_to": new_name,
                "edges": [edge.quad()],
            }
        corrupted = apply_script(plan, EditScript(ops, "harness_corruption"))
        record = CorruptionRecord(kind=kind, locus={"node": node_id, "slot": slot_name}, inverse_hint=hint)
        return corrupted, record

    raise InapplicableKind(kind, f"unknown corruption kind {kind!r}")


# --- feedback synthesis -----------------------------------------------------


def make_feedback(record: CorruptionRecord, mode: str) -> Feedback:
    """Render the feedback a user would give to undo this corruption."""
    hint = record.inverse_hint
    if mode == "detailed":
        return Feedback(mode=mode, text=_detailed_text(record))
    if mode == "vague":
        return Feedback(mode=mode, text=_vague_text(record))
    if mode != "dm_fix":
        raise ValueError(f"unknown feedback mode {mode!r}")

    kind = record.kind
    if kind == "add_node":
        script = EditScript([EditOp("remove_node", {"node": hint["node"]})], "harness_dm_feedback")
        return Feedback(mode=mode, script=script)
    if kind == "remove_edge":
        src, dest, src_output, dest_input = hint["edge"]
        script = EditScript(
            [EditOp("add_edge", {"src_node": src, "dest_node": dest, "src_output": src_output, "dest_input": dest_input})],
            "harness_dm_feedback",
        )
        return Feedback(mode=mode, script=script)
    if kind == "add_edge":
        src, dest, src_output, dest_input = hint["edge"]
        script = EditScript(
            [EditOp("remove_edge", {"src_node": src, "dest_node": dest, "src_output": src_output, "dest_input": dest_input})],
            "harness_dm_feedback",
        )
        return Feedback(mode=mode, script=script)
    if kind == "wrong_agent":
        script = EditScript(
            [EditOp("set_agent", {"node": hint["node"], "agent": hint["agent"]})],
            "harness_dm_feedback",
        )
        return Feedback(mode=mode, script=script)
    if kind == "remove_node":
        # partial inverse: a placeholder node with the right agent and ports
        # but no wiring; the fix pass must reconnect it
        node = dict(hint["node"])
        node.pop("id", None)
        script = EditScript([EditOp("add_node", node)], "harness_dm_feedback")
        return Feedback(mode=mode, script=script, fix_needed=True)
    if kind == "io_change":
        ops: list[EditOp] = []
        add_kind = "add_input" if hint["side"] == "input" else "add_output"
        remove_kind = "remove_input" if hint["side"] == "input" else "remove_output"
        if hint.get("renamed_to"):
            ops.append(EditOp(remove_kind, {"node": hint["node"], "name": hint["renamed_to"]}))
        payload: dict[str, Any] = {"node": hint["node"], "name": hint["name"]}
        if hint["side"] == "input":
            payload["value"] = hint.get("value")
        ops.append(EditOp(add_kind, payload))
        return Feedback(mode=mode, script=EditScript(ops, "harness_dm_feedback"), fix_needed=True)
    raise ValueError(f"unknown corruption kind {kind!r}")


def _detailed_text(record: CorruptionRecord) -> str:
    hint = record.inverse_hint
    kind = record.kind
    if kind == "remove_node":
        agent = hint["node"]["agent"]
        prev = ", ".join(str(i) for i in hint["prev"]) or "the query input"
        nxt = ", ".join(str(i) for i in hint["next"])
        return f"Add a {agent} node connecting {prev} to {nxt}"
    if kind == "add_node":
        return f"Remove a superfluous {hint['agent']} node"
    if kind == "remove_edge":
        return f"Add an edge between {hint['src']} and {hint['dest']}"
    if kind == "add_edge":
        return f"Remove a superfluous edge between {hint['src']} and {hint['dest']}"
    if kind == "wrong_agent":
        return f"Update node {hint['node']} to have the correct agent"
    if kind == "io_change":
        return f"Update node {hint['node']} with valid inputs and outputs"
    raise ValueError(kind)


def _vague_text(record: CorruptionRecord) -> str:
    kind = record.kind
    if kind == "remove_node":
        return f"Add a {record.inverse_hint['node']['agent']} node"
    if kind == "add_node":
        return "Remove a superfluous node"
    if kind == "remove_edge":
        return "Add a missing edge"
    if kind == "add_edge":
        return "Remove a superfluous edge"
    if kind == "wrong_agent":
        return "Assign a correct agent"
    if kind == "io_change":
        return "Set valid inputs and outputs"
    raise ValueError(kind)


# --- case running -------------------------------------------------------------


def run_case(
    case: GoldCase,
    kind: str,
    mode: str,
    seed: int,
    registry: Registry,
    lm: Any = None,
) -> CaseResult:
    """Corrupt, synthesize feedback, refine, score. Errors are recorded on
    the result, never raised out of the sweep."""
    started = time.perf_counter()
    corrupted, record = corrupt(case, kind, seed, registry)
    feedback = make_feedback(record, mode)

    refined = corrupted
    error: str | None = None
    try:
        if mode in ("detailed", "vague"):
            refined = refine_plan(corrupted, feedback.text, registry, lm)
        else:
            assert feedback.script is not None
            refined = apply_script(corrupted, feedback.script)
            if feedback.fix_needed:
                refined = fix_plan(case.query, refined, registry, lm)
    except PlanweaveError as exc:
        error = str(exc)

    acc, acc_reason = execution_accuracy_detail(refined, registry, lm, case.gold_answer)
    iso = 1 if is_isomorphic(refined, case.gold_plan) else 0
    distance = ged(refined, case.gold_plan)
    return CaseResult(
        case_id=case.id,
        dataset=case.dataset,
        kind=kind,
        mode=mode,
        metrics=MetricTriple(acc=acc, iso=iso, ged=distance),
        refined=refined,
        error=error,
        acc_reason=acc_reason,
        timing_s=time.perf_counter() - started,
    )


@dataclass
class SweepConfig:
    kinds: tuple[str, ...] = CORRUPTION_KINDS
    modes: tuple[str, ...] = FEEDBACK_MODES
    master_seed: int = 0
    jobs: int = 0  # 0 = serial


def run_sweep(
    cases: list[GoldCase],
    registry: Registry,
    lm: Any = None,
    config: SweepConfig | None = None,
) -> list[CaseResult]:
    config = config or SweepConfig()
    jobs: list[tuple[GoldCase, str, str, int]] = []
    for case in cases:
        for kind in config.kinds:
            seed = case_seed(config.master_seed, case.id, kind)
            for mode in config.modes:
                jobs.append((case, kind, mode, seed))

    def one(job: tuple[GoldCase, str, str, int]) -> CaseResult:
        case, kind, mode, seed = job
        try:
            return run_case(case, kind, mode, seed, registry, lm)
        except PlanweaveError as exc:
            return CaseResult(
                case_id=case.id,
                dataset=case.dataset,
                kind=kind,
                mode=mode,
                metrics=MetricTriple(acc=0, iso=0, ged=float("nan")),
                refined=case.gold_plan,
                error=str(exc),
            )

    if config.jobs and config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            return list(pool.map(one, jobs))
    return [one(job) for job in jobs]


# --- aggregation ----------------------------------------------------------------


@dataclass
class MetricsReport:
    cells: dict[tuple[str, str, str], dict[str, float]] = field(default_factory=dict)
    counts: dict[tuple[str, str, str], int] = field(default_factory=dict)

    def cell(self, dataset: str, mode: str, kind: str) -> dict[str, float] | None:
        return self.cells.get((dataset, mode, kind))

    def to_json_dict(self) -> dict[str, Any]:
        nested: dict[str, Any] = {}
        for (dataset, mode, kind), stats in sorted(self.cells.items()):
            nested.setdefault(dataset, {}).setdefault(mode, {})[kind] = stats
        return nested

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"


def aggregate(results: list[CaseResult]) -> MetricsReport:
    """Per-(dataset, mode, kind) means: Acc/ISO as percentages, GED as a
    mean, all to two decimals. Order-independent."""
    grouped: dict[tuple[str, str, str], list[CaseResult]] = {}
    for result in results:
        grouped.setdefault((result.dataset, result.mode, result.kind), []).append(result)

    report = MetricsReport()
    for key, bucket in grouped.items():
        n = len(bucket)
        acc = 100.0 * sum(r.metrics.acc for r in bucket) / n
        iso = 100.0 * sum(r.metrics.iso for r in bucket) / n
        geds = [r.metrics.ged for r in bucket if r.metrics.ged == r.metrics.ged]  # drop NaN
        mean_ged = sum(geds) / len(geds) if geds else float("nan")
        report.cells[key] = {
            "acc": round(acc, 2),
            "iso": round(iso, 2),
            "ged": round(mean_ged, 2) if geds else None,  # type: ignore[dict-item]
        }
        report.counts[key] = n
    return report


def render_table(report: MetricsReport) -> str:
    """Plain-text table: one row per (dataset, mode), kind columns with
    Acc/ISO/GED triples. Missing cells render as a dash."""
    datasets = sorted({key[0] for key in report.cells})
    modes = [m for m in FEEDBACK_MODES if any(k[1] == m for k in report.cells)]
    kinds = [k for k in CORRUPTION_KINDS if any(key[2] == k for key in report.cells)]

    header_1 = f"{'Dataset':<16} {'Feedback':<10}"
    header_2 = f"{'':<16} {'':<10}"
    for kind in kinds:
        header_1 += f" | {KIND_DISPLAY[kind]:^23}"
        header_2 += f" | {'Acc':>7} {'ISO':>7} {'GED':>7}"
    lines = [header_1, header_2, "-" * len(header_2)]

    def fmt(value: float | None) -> str:
        if value is None or value != value:
            return f"{'–':>7}"
        return f"{value:>7.2f}"

    for dataset in datasets:
        for mode in modes:
            row = f"{dataset:<16} {mode:<10}"
            for kind in kinds:
                stats = report.cell(dataset, mode, kind)
                if stats is None:
                    row += f" | {'–':>7} {'–':>7} {'–':>7}"
                else:
                    row += f" | {fmt(stats['acc'])} {fmt(stats['iso'])} {fmt(stats['ged'])}"
            lines.append(row)
    return "\n".join(lines) + "\n"


def write_report(report: MetricsReport, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / "report.json"
    text_path = out / "report.txt"
    json_path.write_text(report.to_json(), encoding="utf-8")
    text_path.write_text(render_table(report), encoding="utf-8")
    return json_path, text_path
