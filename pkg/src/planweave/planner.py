"""Language-model-backed planning: generate, refine, fix, classify, respond.

All plan-producing paths share one postprocessing pipeline: parse the reply
(tolerating fences/prose), null out values on edge-fed inputs, validate
against the registry, and allow one automatic repair round before failing
loudly with the collected problems.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Any

from planweave.agents import Registry
from planweave.errors import MalformedPlan, PlannerOutputInvalid, SchemaViolation, UnknownFixture
from planweave.llm import LanguageModelClient, PromptBundle
from planweave.plan import PlanGraph, Value, parse_plan, serialize_plan, validate
from planweave.prompts import (
    render_fix_prompt,
    render_intent_prompt,
    render_plan_prompt,
    render_refine_prompt,
    render_repair_prompt,
    render_response_prompt,
)

logger = logging.getLogger(__name__)

# verbs that, with a plan on screen, read as instructions to adjust it
_IMPERATIVE_VERBS = frozenset(
    {
        "add", "remove", "delete", "drop", "filter", "change", "update", "replace",
        "insert", "connect", "set", "assign", "fix", "modify", "rename", "swap",
        "reorder", "keep", "exclude", "include", "use",
    }
)
_EXECUTE_RE = re.compile(r"^\s*(run|execute)\b", re.IGNORECASE)
_NODE_REF_RE = re.compile(r"\bnode\s+(\d+)", re.IGNORECASE)


@dataclass
class Intent:
    kind: str  # new_query | refine_feedback | execute_all | execute_node | other
    text: str = ""
    node: int | None = None


@dataclass
class ResponseEvent:
    """What just happened, for short chat-panel responses."""

    event: str  # planned | executed | refined
    plan: PlanGraph | None = None
    query: str = ""
    final_answer: Value = None
    interaction: str = ""
    extra: dict[str, Any] = field(default_factory=dict)


def normalize_dependent_inputs(plan: PlanGraph) -> PlanGraph:
    """Null out any value sitting on an edge-fed input slot.

    Planner replies must not pre-fill values that flow in through edges;
    this enforces it idempotently on anything a model returns.
    """
    fed = {(e.dest_node, e.dest_input) for e in plan.edges}
    for node in plan.nodes:
        for slot in node.inputs:
            if (node.id, slot.name) in fed and slot.value is not None:
                slot.value = None
    return plan


def _vet_reply(reply: str, registry: Registry, query: str) -> tuple[PlanGraph | None, list[str]]:
    """Parse + normalize + validate one model reply. Returns (plan, problems);
    plan is None when undecodable."""
    try:
        plan = parse_plan(reply)
    except (MalformedPlan, SchemaViolation) as exc:
        return None, [str(exc)]
    if query and not plan.query:
        plan.query = query
    plan = normalize_dependent_inputs(plan)
    report = validate(plan, registry)
    problems = [f"{issue.code} at {issue.locus}: {issue.message}" for issue in report.errors]
    if len(plan.nodes) < 2:
        problems.append("plan must have at least 2 steps")
    return plan, problems


def _call_and_vet(
    lm: LanguageModelClient, bundle: PromptBundle, registry: Registry, query: str
) -> PlanGraph:
    """One request plus at most one automatic repair round."""
    if lm is None:
        from planweave.errors import TransportError

        raise TransportError("no language-model client configured (lm mode 'none')")
    reply = lm.complete(bundle)
    plan, problems = _vet_reply(reply, registry, query)
    if not problems:
        assert plan is not None
        return plan
    logger.info("planner reply invalid (%s); attempting repair", "; ".join(problems))
    repair = render_repair_prompt(bundle, problems, reply)
    try:
        reply = lm.complete(repair)
    except UnknownFixture:
        raise PlannerOutputInvalid(
            f"planner output invalid and no repair fixture: {'; '.join(problems)}", problems
        ) from None
    plan, problems = _vet_reply(reply, registry, query)
    if problems:
        raise PlannerOutputInvalid(
            f"planner output still invalid after repair: {'; '.join(problems)}", problems
        )
    assert plan is not None
    return plan


def generate_plan(query: str, registry: Registry, lm: LanguageModelClient) -> PlanGraph:
    """Decompose a query into an agent-assigned plan."""
    if not registry.agents:
        raise PlannerOutputInvalid("cannot plan with an empty registry")
    bundle = render_plan_prompt(query, registry)
    plan = _call_and_vet(lm, bundle, registry, query)
    plan.query = query
    return plan


def refine_plan(
    plan: PlanGraph, feedback: str, registry: Registry, lm: LanguageModelClient
) -> PlanGraph:
    """Re-plan from the current state plus natural-language feedback."""
    if not feedback.strip():
        return plan
    bundle = render_refine_prompt(plan, feedback, registry)
    refined = _call_and_vet(lm, bundle, registry, plan.query)
    if not refined.query:
        refined.query = plan.query
    return refined


def fix_plan(
    query: str, partial: PlanGraph, registry: Registry, lm: LanguageModelClient
) -> PlanGraph:
    """Complete or repair a partially edited (possibly invalid) plan."""
    bundle = render_fix_prompt(query, partial, registry)
    fixed = _call_and_vet(lm, bundle, registry, query)
    if not fixed.query:
        fixed.query = query or partial.query

    surviving = sum(
        1
        for node in partial.nodes
        if fixed.has_node(node.id) and fixed.node(node.id).agent == node.agent
    )
    total = max(len(partial.nodes), 1)
    logger.info("fix preserved %d/%d nodes (%.0f%%)", surviving, total, 100.0 * surviving / total)
    return fixed


def classify_intent(
    message: str, has_plan: bool, lm: LanguageModelClient | None = None
) -> Intent:
    """Map a chat message to an intent. Uses deterministic keyword rules in
    scripted/offline mode; a live client may be consulted instead.
    """
    if lm is not None and getattr(lm, "mode", "") == "live":
        bundle = render_intent_prompt(message, has_plan)
        try:
            raw = json.loads(lm.complete(bundle))
            kind = raw.get("kind", "other")
            if kind in ("new_query", "refine_feedback", "execute_all", "execute_node", "other"):
                return Intent(kind=kind, text=raw.get("text", message), node=raw.get("node"))
        except Exception:  # fall back to rules on any live hiccup
            logger.warning("live intent classification failed; using keyword rules")

    stripped = message.strip()
    if not stripped:
        return Intent(kind="other", text=message)
    if _EXECUTE_RE.match(stripped):
        node_match = _NODE_REF_RE.search(stripped)
        if node_match:
            return Intent(kind="execute_node", text=message, node=int(node_match.group(1)))
        return Intent(kind="execute_all", text=message)
    first_word = re.split(r"\W+", stripped, maxsplit=1)[0].lower()
    if has_plan and first_word in _IMPERATIVE_VERBS:
        return Intent(kind="refine_feedback", text=stripped)
    return Intent(kind="new_query", text=stripped)


def render_response(event: ResponseEvent, lm: LanguageModelClient | None = None) -> str:
    """One- or two-line chat response for a system action.

    Deterministic summaries in scripted/offline mode; live mode asks the
    model but falls back to the summary on transport trouble.
    """
    summary = _deterministic_summary(event)
    if lm is None or getattr(lm, "mode", "") != "live":
        return summary
    plan_text = serialize_plan(event.plan) if event.plan is not None else "(no plan)"
    bundle = render_response_prompt(event.event, event.query, plan_text, event.interaction)
    try:
        reply = lm.complete(bundle).strip()
        return reply or summary
    except Exception:
        logger.warning("response generation failed; using deterministic summary")
        return summary


def _deterministic_summary(event: ResponseEvent) -> str:
    plan = event.plan
    if event.event == "planned" and plan is not None:
        agents = ", ".join(n.agent for n in plan.nodes)
        return f"Planned {len(plan.nodes)} steps using agents {agents}."
    if event.event == "executed":
        answer = json.dumps(event.final_answer, ensure_ascii=False)
        return f"Executed; final answer {answer}."
    if event.event == "refined" and plan is not None:
        what = event.interaction or "feedback"
        return f"Updated plan: {what} applied, now {len(plan.nodes)} steps."
    return "Done."
