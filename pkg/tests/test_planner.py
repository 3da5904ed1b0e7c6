"""Planner: generation, refinement, fixing, intent rules, responses."""

from __future__ import annotations

import json

import pytest

from planweave.edits import apply_script
from planweave.errors import PlannerOutputInvalid, UnknownFixture
from planweave.harness import SIMPLE_KINDS, corrupt, load_corpus, make_feedback
from planweave.llm import EchoClient, LanguageModelClient, PromptBundle, ScriptedClient
from planweave.metrics import is_isomorphic
from planweave.plan import parse_plan, serialize_plan, validate
from planweave.planner import (
    Intent,
    ResponseEvent,
    classify_intent,
    fix_plan,
    generate_plan,
    normalize_dependent_inputs,
    refine_plan,
    render_response,
)
from planweave.prompts import (
    registry_text,
    render_fix_prompt,
    render_plan_prompt,
    render_refine_prompt,
)
from tests.conftest import CORPUS_PATH, chain_plan

TWO_NODE_REPLY = """```json
{"nodes": [
  {"id": 1, "name": "identify_operands", "task": "Identify operands in: what is 3 plus 4",
   "input": [["query", "what is 3 plus 4"]], "output": ["operands"]},
  {"id": 2, "name": "add", "task": "Add the operands.",
   "input": [["numbers", null]], "output": ["sum"]}],
 "edges": [{"src_node": 1, "dest_node": 2, "src_output": "operands", "dest_input": "numbers"}]}
```"""

ONE_NODE_REPLY = """{"nodes": [
  {"id": 1, "name": "add", "task": "Add.", "input": [["a", 3], ["b", 4]], "output": ["sum"]}],
 "edges": []}"""


class CapturingClient(LanguageModelClient):
    """Wraps another client and keeps every bundle it saw."""

    mode = "scripted"

    def __init__(self, inner: LanguageModelClient):
        self.inner = inner
        self.bundles: list[PromptBundle] = []

    def complete(self, bundle: PromptBundle) -> str:
        self.bundles.append(bundle)
        return self.inner.complete(bundle)


class TestGeneratePlan:
    def test_scripted_two_node_plan(self, registry, tmp_path):
        lm = ScriptedClient(tmp_path)
        lm.record(render_plan_prompt("what is 3 plus 4", registry), TWO_NODE_REPLY)
        plan = generate_plan("what is 3 plus 4", registry, lm)
        assert len(plan.nodes) == 2
        assert plan.query == "what is 3 plus 4"
        assert validate(plan, registry).ok

    def test_one_node_reply_escalates(self, registry, tmp_path):
        lm = ScriptedClient(tmp_path)
        lm.record(render_plan_prompt("add 3 and 4", registry), ONE_NODE_REPLY)
        with pytest.raises(PlannerOutputInvalid):
            generate_plan("add 3 and 4", registry, lm)

    def test_repair_round_recovers(self, registry, tmp_path):
        from planweave.prompts import render_repair_prompt

        lm = ScriptedClient(tmp_path)
        base = render_plan_prompt("add 3 and 4", registry)
        lm.record(base, ONE_NODE_REPLY)
        repair = render_repair_prompt(base, ["plan must have at least 2 steps"], ONE_NODE_REPLY)
        lm.record(repair, TWO_NODE_REPLY)
        plan = generate_plan("add 3 and 4", registry, lm)
        assert len(plan.nodes) == 2

    def test_prefilled_dependent_inputs_nulled(self, registry, tmp_path):
        reply = TWO_NODE_REPLY.replace('[["numbers", null]]', '[["numbers", [3, 4]]]')
        lm = ScriptedClient(tmp_path)
        lm.record(render_plan_prompt("q", registry), reply)
        plan = generate_plan("q", registry, lm)
        assert plan.node(2).inputs[0].value is None

    def test_prompt_embeds_registry(self, registry, tmp_path):
        inner = ScriptedClient(tmp_path)
        inner.record(render_plan_prompt("q2", registry), TWO_NODE_REPLY)
        lm = CapturingClient(inner)
        generate_plan("q2", registry, lm)
        assert registry_text(registry) in lm.bundles[0].system

    def test_unknown_fixture_is_loud(self, registry, tmp_path):
        lm = ScriptedClient(tmp_path)
        with pytest.raises(UnknownFixture):
            generate_plan("never recorded", registry, lm)


class TestRefinePlan:
    def test_empty_feedback_no_call(self, registry):
        class Exploding(LanguageModelClient):
            def complete(self, bundle):
                raise AssertionError("must not be called")

        plan = chain_plan(3)
        assert refine_plan(plan, "   ", registry, Exploding()) is plan

    def test_refine_prompt_embeds_plan_and_registry(self, registry, tmp_path):
        plan = chain_plan(3, agent="add")
        inner = ScriptedClient(tmp_path)
        bundle = render_refine_prompt(plan, "Remove a superfluous node", registry)
        inner.record(bundle, TWO_NODE_REPLY)
        lm = CapturingClient(inner)
        refine_plan(plan, "Remove a superfluous node", registry, lm)
        assert serialize_plan(plan) in lm.bundles[0].user
        assert "Original Plan:" in lm.bundles[0].user
        assert "User Feedback:" in lm.bundles[0].user
        assert registry_text(registry) in lm.bundles[0].system

    def test_scripted_distractor_removal(self, registry, tmp_path):
        cases = load_corpus(CORPUS_PATH, registry)
        case = cases[0]
        corrupted, record = corrupt(case, "add_node", seed=11, registry=registry)
        lm = ScriptedClient(tmp_path)
        bundle = render_refine_prompt(corrupted, "Remove a superfluous node", registry)
        lm.record(bundle, serialize_plan(case.gold_plan))
        refined = refine_plan(corrupted, "Remove a superfluous node", registry, lm)
        assert is_isomorphic(refined, case.gold_plan)


class TestFixPlan:
    def test_placeholder_completion(self, registry, tmp_path):
        # partial: chain with a placeholder node added but never wired
        from planweave.edits import EditOp, apply_edit

        partial = apply_edit(
            chain_plan(2, agent="add"),
            EditOp("add_node", {"agent": "multiply", "task": "scale the result",
                                "input": [["x", None]], "output": ["scaled"]}),
        )
        target = chain_plan(3, agent="add")
        lm = ScriptedClient(tmp_path)
        lm.record(render_fix_prompt("chain", partial, registry), serialize_plan(target))
        fixed = fix_plan("chain", partial, registry, lm)
        assert validate(fixed, registry).ok

    def test_dm_fix_cases_reach_gold(self, registry, tmp_path):
        """Scripted-gold fix calls restore isomorphism for the partial-inverse
        kinds; the exact-inverse kinds restore without any call."""
        cases = load_corpus(CORPUS_PATH, registry)[:6]
        lm = ScriptedClient(tmp_path)
        for case in cases:
            for kind in ("remove_node",) + SIMPLE_KINDS:
                corrupted, record = corrupt(case, kind, seed=5, registry=registry)
                feedback = make_feedback(record, "dm_fix")
                partial = apply_script(corrupted, feedback.script)
                if feedback.fix_needed:
                    lm.record(render_fix_prompt(case.query, partial, registry), serialize_plan(case.gold_plan))
                    restored = fix_plan(case.query, partial, registry, lm)
                else:
                    restored = partial
                assert is_isomorphic(restored, case.gold_plan), (case.id, kind)

    def test_already_valid_plan_survives(self, registry, tmp_path):
        plan = chain_plan(3)
        lm = ScriptedClient(tmp_path)
        lm.record(render_fix_prompt("q", plan, registry), serialize_plan(plan))
        fixed = fix_plan("q", plan, registry, lm)
        assert validate(fixed, registry).ok


class TestClassifyIntent:
    def test_no_plan_query(self):
        intent = classify_intent("Help me find a job in Atlanta. I am looking for MLE roles.", has_plan=False)
        assert intent.kind == "new_query"

    def test_filter_feedback_with_plan(self):
        intent = classify_intent("Filter out jobs that are not in Atlanta", has_plan=True)
        assert intent.kind == "refine_feedback"

    def test_execute_all_keyword(self):
        assert classify_intent("execute the plan", has_plan=True).kind == "execute_all"
        assert classify_intent("run it", has_plan=True).kind == "execute_all"

    def test_execute_single_node(self):
        intent = classify_intent("run node 2 again", has_plan=True)
        assert intent.kind == "execute_node"
        assert intent.node == 2

    def test_imperative_without_plan_is_query(self):
        assert classify_intent("Add the numbers for me", has_plan=False).kind == "new_query"

    def test_empty_message_other(self):
        assert classify_intent("  ", has_plan=True).kind == "other"


class TestRenderResponse:
    def test_planned_single_line_with_step_count(self):
        plan = parse_plan(TWO_NODE_REPLY)
        text = render_response(ResponseEvent(event="planned", plan=plan, query="q"))
        assert "\n" not in text
        assert "2" in text

    def test_executed_mentions_answer(self):
        text = render_response(ResponseEvent(event="executed", final_answer=7))
        assert "7" in text

    def test_refined_names_interaction(self):
        plan = parse_plan(TWO_NODE_REPLY)
        text = render_response(ResponseEvent(event="refined", plan=plan, interaction="add_edge"))
        assert "add_edge" in text


class TestNormalization:
    def test_idempotent(self):
        plan = parse_plan(TWO_NODE_REPLY)
        plan.node(2).inputs[0].value = [1, 2]
        once = normalize_dependent_inputs(plan)
        assert once.node(2).inputs[0].value is None
        twice = normalize_dependent_inputs(once)
        assert twice == once

    def test_non_dependent_values_kept(self):
        plan = parse_plan(TWO_NODE_REPLY)
        normalize_dependent_inputs(plan)
        assert plan.node(1).inputs[0].value == "what is 3 plus 4"


class TestEchoClient:
    def test_echo_refine_returns_same_plan(self, registry):
        plan = chain_plan(3)
        refined = refine_plan(plan, "Remove a superfluous node", registry, EchoClient())
        assert serialize_plan(refined) == serialize_plan(plan)
