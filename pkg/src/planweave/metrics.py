"""Plan comparison metrics: labeled isomorphism, exact graph edit distance,
and execution accuracy.

Both graph metrics work on the same quotient of a plan: nodes carry their
agent name as label, edges are the directed (src, dest) pairs with parallel
port edges collapsed, node ids are anonymous. Port names and task text do
not participate, so a relabeled or re-worded but structurally identical
plan compares equal.
"""

from __future__ import annotations

import heapq
import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Any

from planweave.executor import answers_match, execute_all, extract_final_answer
from planweave.plan import PlanGraph, Value, validate

EXACT_NODE_LIMIT = 8


@dataclass(frozen=True)
class CostModel:
    node_insert: float = 1.0
    node_delete: float = 1.0
    node_substitute: float = 1.0  # applied only when agent labels differ
    edge_insert: float = 1.0
    edge_delete: float = 1.0


DEFAULT_COSTS = CostModel()


@dataclass
class MetricTriple:
    acc: int
    iso: int
    ged: float


@dataclass(frozen=True)
class LabeledGraph:
    """The comparison view of a plan."""

    labels: tuple[str, ...]  # label of node i
    edges: frozenset[tuple[int, int]]  # directed, indices into labels

    @classmethod
    def from_plan(cls, plan: PlanGraph) -> "LabeledGraph":
        index = {node_id: i for i, node_id in enumerate(plan.node_ids())}
        labels = tuple(node.agent for node in plan.nodes)
        edges = frozenset(
            (index[src], index[dest])
            for src, dest in plan.edge_pairs()
            if src in index and dest in index
        )
        return cls(labels=labels, edges=edges)

    @property
    def order(self) -> int:
        return len(self.labels)


# --- isomorphism -----------------------------------------------------------


def _degree_signature(graph: LabeledGraph, node: int) -> tuple[str, int, int]:
    out_deg = sum(1 for s, _ in graph.edges if s == node)
    in_deg = sum(1 for _, d in graph.edges if d == node)
    return (graph.labels[node], in_deg, out_deg)


def is_isomorphic(a: PlanGraph, b: PlanGraph) -> bool:
    """True iff a node bijection exists preserving agent labels and the
    directed edge relation (ids, ports, and task text ignored).
    """
    ga, gb = LabeledGraph.from_plan(a), LabeledGraph.from_plan(b)
    if ga.order != gb.order or len(ga.edges) != len(gb.edges):
        return False
    if Counter(ga.labels) != Counter(gb.labels):
        return False
    sig_a = Counter(_degree_signature(ga, i) for i in range(ga.order))
    sig_b = Counter(_degree_signature(gb, i) for i in range(gb.order))
    if sig_a != sig_b:
        return False

    # backtracking over candidate images, most-constrained nodes first
    candidates: dict[int, list[int]] = {
        i: [j for j in range(gb.order) if _degree_signature(gb, j) == _degree_signature(ga, i)]
        for i in range(ga.order)
    }
    order = sorted(range(ga.order), key=lambda i: len(candidates[i]))
    mapping: dict[int, int] = {}
    used: set[int] = set()

    def feasible(i: int, j: int) -> bool:
        for other_a, other_b in mapping.items():
            if ((i, other_a) in ga.edges) != ((j, other_b) in gb.edges):
                return False
            if ((other_a, i) in ga.edges) != ((other_b, j) in gb.edges):
                return False
        return True

    def extend(position: int) -> bool:
        if position == len(order):
            return True
        i = order[position]
        for j in candidates[i]:
            if j in used or not feasible(i, j):
                continue
            mapping[i] = j
            used.add(j)
            if extend(position + 1):
                return True
            del mapping[i]
            used.remove(j)
        return False

    return extend(0)


# --- graph edit distance -----------------------------------------------------


def _mapping_cost(
    ga: LabeledGraph, gb: LabeledGraph, mapping: dict[int, int], cost: CostModel
) -> float:
    """Total edit cost induced by a complete (possibly partial-image) node
    mapping: unmapped a-nodes are deleted, unused b-nodes inserted, edge
    costs follow from the node correspondence.
    """
    total = 0.0
    mapped_a = set(mapping)
    used_b = set(mapping.values())
    for i in range(ga.order):
        if i in mapped_a:
            if ga.labels[i] != gb.labels[mapping[i]]:
                total += cost.node_substitute
        else:
            total += cost.node_delete
    total += cost.node_insert * (gb.order - len(used_b))

    for s, d in ga.edges:
        if s in mapped_a and d in mapped_a:
            if (mapping[s], mapping[d]) not in gb.edges:
                total += cost.edge_delete
        else:
            total += cost.edge_delete
    inverse = {v: k for k, v in mapping.items()}
    for s, d in gb.edges:
        if s in used_b and d in used_b:
            if (inverse[s], inverse[d]) not in ga.edges:
                total += cost.edge_insert
        else:
            total += cost.edge_insert
    return total


def _label_lower_bound(
    remaining_a: list[str], remaining_b: list[str], cost: CostModel
) -> float:
    """Admissible bound from labels alone: unmatched labels must be
    substituted, surplus nodes inserted or deleted."""
    ca, cb = Counter(remaining_a), Counter(remaining_b)
    overlap = sum((ca & cb).values())
    na, nb = len(remaining_a), len(remaining_b)
    matched = min(na, nb)
    substitutions = matched - overlap if matched > overlap else 0
    deletions = na - matched
    insertions = nb - matched
    return (
        substitutions * min(cost.node_substitute, cost.node_delete + cost.node_insert)
        + deletions * cost.node_delete
        + insertions * cost.node_insert
    )


def _search_exact(ga: LabeledGraph, gb: LabeledGraph, cost: CostModel) -> float:
    """Best-first search over prefixes of a node assignment: each a-node is
    mapped to an unused b-node or deleted. High-degree nodes are decided
    first so edge-cost information prunes early."""
    degree = {i: 0 for i in range(ga.order)}
    for s, d in ga.edges:
        degree[s] += 1
        degree[d] += 1
    decide_order = sorted(range(ga.order), key=lambda i: (-degree[i], i))
    new_index = {old: new for new, old in enumerate(decide_order)}
    ga = LabeledGraph(
        labels=tuple(ga.labels[old] for old in decide_order),
        edges=frozenset((new_index[s], new_index[d]) for s, d in ga.edges),
    )
    na, nb = ga.order, gb.order

    def partial_edge_cost(mapping: dict[int, int | None], i: int, target: int | None) -> float:
        """Edge cost incurred by deciding node i (edges to previously decided nodes)."""
        added = 0.0
        for j, tj in mapping.items():
            for u, v, gu, gv in ((i, j, target, tj), (j, i, tj, target)):
                a_has = (u, v) in ga.edges
                if gu is None or gv is None:
                    if a_has:
                        added += cost.edge_delete
                    continue
                b_has = (gu, gv) in gb.edges
                if a_has and not b_has:
                    added += cost.edge_delete
                elif b_has and not a_has:
                    added += cost.edge_insert
        return added

    def closing_cost(mapping: dict[int, int | None]) -> float:
        # edges between mapped images were already charged while the prefix
        # grew; only insertions touching never-used b-nodes remain
        used = {v for v in mapping.values() if v is not None}
        unused = {j for j in range(nb) if j not in used}
        total = cost.node_insert * len(unused)
        for s, d in gb.edges:
            if s in unused or d in unused:
                total += cost.edge_insert
        return total

    counter = itertools.count()
    start_h = _label_lower_bound(list(ga.labels), list(gb.labels), cost)
    heap: list[tuple[float, int, int, float, dict[int, int | None]]] = [
        (start_h, next(counter), 0, 0.0, {})
    ]
    best = float("inf")
    while heap:
        estimate, _, depth, g, mapping = heapq.heappop(heap)
        if estimate >= best:
            continue
        if depth == na:
            total = g + closing_cost(mapping)
            if total < best:
                best = total
            continue
        i = depth
        used = {v for v in mapping.values() if v is not None}
        remaining_a = [ga.labels[k] for k in range(i + 1, na)]
        options: list[int | None] = [j for j in range(nb) if j not in used]
        options.append(None)
        for target in options:
            g2 = g + partial_edge_cost(mapping, i, target)
            if target is None:
                g2 += cost.node_delete
            elif ga.labels[i] != gb.labels[target]:
                g2 += cost.node_substitute
            remaining_b = [gb.labels[j] for j in range(nb) if j not in used and j != target]
            h2 = _label_lower_bound(remaining_a, remaining_b, cost)
            if g2 + h2 < best:
                new_mapping = dict(mapping)
                new_mapping[i] = target
                heapq.heappush(heap, (g2 + h2, next(counter), depth + 1, g2, new_mapping))
    return best


def _greedy_upper_bound(ga: LabeledGraph, gb: LabeledGraph, cost: CostModel) -> float:
    """Certified upper bound for large graphs: greedy label-aware matching."""
    mapping: dict[int, int] = {}
    used: set[int] = set()
    for i in range(ga.order):
        same = [j for j in range(gb.order) if j not in used and gb.labels[j] == ga.labels[i]]
        pool = same or [j for j in range(gb.order) if j not in used]
        if pool:
            choice = min(pool)
            mapping[i] = choice
            used.add(choice)
    return _mapping_cost(ga, gb, mapping, cost)


@dataclass(frozen=True)
class GedResult:
    value: float
    exact: bool


def ged_detail(a: PlanGraph, b: PlanGraph, cost: CostModel = DEFAULT_COSTS) -> GedResult:
    ga, gb = LabeledGraph.from_plan(a), LabeledGraph.from_plan(b)
    if max(ga.order, gb.order) > EXACT_NODE_LIMIT:
        return GedResult(value=_greedy_upper_bound(ga, gb, cost), exact=False)
    return GedResult(value=_search_exact(ga, gb, cost), exact=True)


def ged(a: PlanGraph, b: PlanGraph, cost: CostModel = DEFAULT_COSTS) -> float:
    """Minimum-cost edit sequence between the two plans' comparison graphs.

    Exact up to ``EXACT_NODE_LIMIT`` nodes; beyond that a certified upper
    bound is returned (``ged_detail`` reports which one you got).
    """
    return ged_detail(a, b, cost).value


def brute_force_ged(a: PlanGraph, b: PlanGraph, cost: CostModel = DEFAULT_COSTS) -> float:
    """Oracle: enumerate every injective partial node mapping outright.

    Exponential; intended for graphs of at most ~5 nodes in tests.
    """
    ga, gb = LabeledGraph.from_plan(a), LabeledGraph.from_plan(b)
    na, nb = ga.order, gb.order
    best = float("inf")
    indices_b = list(range(nb))
    for k in range(0, min(na, nb) + 1):
        for subset_a in itertools.combinations(range(na), k):
            for image in itertools.permutations(indices_b, k):
                mapping = dict(zip(subset_a, image))
                best = min(best, _mapping_cost(ga, gb, mapping, cost))
    return best


# --- execution accuracy -----------------------------------------------------


def execution_accuracy_detail(
    refined: PlanGraph, registry: Any, lm: Any, gold_answer: Value
) -> tuple[int, str | None]:
    """Score 1 iff the refined plan validates, executes, and lands on the
    gold answer; otherwise 0 with a reason code."""
    report = validate(refined, registry)
    if not report.ok:
        return 0, "invalid-plan"
    try:
        executed, trace = execute_all(refined, registry, lm)
    except Exception:
        return 0, "execution-error"
    if any(record.error for record in trace.records):
        return 0, "node-failure"
    answer = extract_final_answer(executed)
    if answer is None:
        return 0, "no-answer"
    if answers_match(answer, gold_answer):
        return 1, None
    return 0, "wrong-answer"


def execution_accuracy(refined: PlanGraph, registry: Any, lm: Any, gold_answer: Value) -> int:
    return execution_accuracy_detail(refined, registry, lm, gold_answer)[0]
