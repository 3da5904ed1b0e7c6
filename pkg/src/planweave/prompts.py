"""Versioned prompt templates for planning, refinement, fixing, intent, and
response generation. Every language-model request goes through one of these
renderers; scripted fixtures are keyed off the rendered text, so changes
here are breaking and bump ``TEMPLATE_VERSION``.
"""

from __future__ import annotations

import json
from pathlib import Path

from planweave.agents import Registry
from planweave.llm import PromptBundle
from planweave.plan import PlanGraph, serialize_plan

TEMPLATE_VERSION = 1

_EXAMPLES_PATH = Path(__file__).parent / "data" / "plan_examples.json"

PLANNER_SYSTEM = """\
You are a planner responsible for creating high-level plans to solve any tasks using a set of agents.
Your goal is to break down a given task into a sequence of subtasks that, when executed correctly by the appropriate agents, will lead to the correct solution.
A plan should have at least 2 steps.

For each step in the plan:
1. Describe the subtask the agent must perform.
2. Provide a brief, self-contained description of the expected inputs and outputs. Do not include any specific values or examples.
3. Generate an instruction prompt for the agent.

Represent your plan as a graph where each node corresponds to a step, and each edge represents a dependency between two steps i.e., a step's output is used as an input for a subsequent step.
If a node requires the output from a previous node as an input, ensure it is included in the edge list.
An input variable for a node is a tuple, where the first item is an input description, the second item is the value of the variable if it can be predetermined without executing the plan.
If it is dependent upon preceding nodes, set null. DO NOT INFER THE VALUE. DO NOT EXECUTE THE STEPS.
The output should be structured in the following JSON format:
{
    'nodes': <list of JSON nodes {'id': <node id as integer>, 'name': <assigned agent name>, 'task': <instruction prompt>, 'input': <list of tuple (input var, its value)>, 'output': <list of outputs>}>,
    'edges': <list of JSON edges {'src_node': <source node id>, 'dest_node': <destination node id>, 'src_output': <output variable name>, 'dest_input': <input variable name>}>
}

eg.
{examples}

Here are the available agents:
```
{registry}
```

For identify_operands, ensure you repeat the query in the task. Sometimes, the query may require a multiplier eg. "..twice of", divisor eg. "divide by x", percentage, in a later task. Ensure all such operations are also captured in identify_operands.
There may be multiple inputs from one node to another. In that case, ensure you define separate edges from one node to the other.
For some agents, ensure that input order is correct, e.g., when calculating profit, revenue - cost is different from cost - revenue. so input should be [revenue, cost] order.
"""

REFINE_USER = """\
Given the original plan, refine it according to user feedback

Original Plan:
{plan}

User Feedback:
{feedback}"""

FIX_USER = """\
Given a query, an initial plan will be given to you. The initial plan may be incomplete or incorrect.
Your job is to complete or fix the plan. Stay as true to the initial plan as you can.

Query:
{query}

Initial Plan:
{plan}"""

REPAIR_USER = """\
{original}

Your previous plan was invalid:
{problems}

Previous plan:
{previous}

Return a corrected plan in the same JSON format."""

RESPONSE_SYSTEM = """\
You are a natural language interface for a multi-agent system.
This system creates a plan to answer a user query and executes it using AI agents.
Your task is to explain the actions triggered by the user input and clearly communicate the system's output in a very short (max 1-2 line) response.
Do not mention anything else. Write down only plain text."""

RESPONSE_PLANNED_USER = """\
Generate a very short (max 1-2 line) response to a user query to generate a plan.
The response should simply provide a high level response of what the plan does, and minor details such as number of steps.

User Query: {query}
Plan: {plan}"""

RESPONSE_EXECUTED_USER = """\
Generate a very short (max 1-2 line) response to a user query to execute a plan or a single node.
The response should simply provide a high level response of the execution, and minor details such as final result.

User Query: {query}
Plan: {plan}"""

RESPONSE_REFINED_USER = """\
Generate a very short (max 1-2 line) response to a user query to interact with a plan.
The response should simply provide a high level response of the plan which was interacted with and what change took place.

Interaction Type: {interaction}
Plan: {plan}"""

INTENT_SYSTEM = """\
You classify a user message addressed to a multi-agent planning assistant.
Answer with one JSON object: {"kind": <new_query|refine_feedback|execute_all|execute_node|other>, "node": <node id or null>, "text": <the query or feedback text>}.
new_query starts a fresh plan; refine_feedback adjusts the current plan; execute_all runs the whole plan; execute_node runs one node."""

INTENT_USER = """\
Current plan present: {has_plan}
Message: {message}"""


def _demo_examples() -> str:
    try:
        text = _EXAMPLES_PATH.read_text("utf-8")
    except FileNotFoundError:
        return "(no examples available)"
    examples = json.loads(text)
    blocks = []
    for example in examples:
        blocks.append(f"Query: {example['query']}\nPlan:\n{json.dumps(example['plan'], indent=2)}")
    return "\n\n".join(blocks)


def registry_text(registry: Registry) -> str:
    return json.dumps(registry.to_wire(), indent=2, ensure_ascii=False)


def planner_system(registry: Registry) -> str:
    # .replace, not .format: the template body contains literal JSON braces
    return PLANNER_SYSTEM.replace("{examples}", _demo_examples()).replace(
        "{registry}", registry_text(registry)
    )


def render_plan_prompt(query: str, registry: Registry) -> PromptBundle:
    return PromptBundle(system=planner_system(registry), user=query, template_id="plan")


def render_refine_prompt(plan: PlanGraph, feedback: str, registry: Registry) -> PromptBundle:
    user = REFINE_USER.format(plan=serialize_plan(plan), feedback=feedback)
    return PromptBundle(system=planner_system(registry), user=user, template_id="refine")


def render_fix_prompt(query: str, plan: PlanGraph, registry: Registry) -> PromptBundle:
    user = FIX_USER.format(query=query, plan=serialize_plan(plan))
    return PromptBundle(system=planner_system(registry), user=user, template_id="fix")


def render_repair_prompt(base: PromptBundle, problems: list[str], previous_reply: str) -> PromptBundle:
    user = REPAIR_USER.format(
        original=base.user,
        problems="\n".join(f"- {p}" for p in problems),
        previous=previous_reply,
    )
    return PromptBundle(system=base.system, user=user, template_id=base.template_id)


def render_response_prompt(event: str, query: str, plan_text: str, interaction: str = "") -> PromptBundle:
    if event == "planned":
        user = RESPONSE_PLANNED_USER.format(query=query, plan=plan_text)
    elif event == "executed":
        user = RESPONSE_EXECUTED_USER.format(query=query, plan=plan_text)
    else:
        user = RESPONSE_REFINED_USER.format(interaction=interaction or event, plan=plan_text)
    return PromptBundle(system=RESPONSE_SYSTEM, user=user, template_id="respond")


def render_intent_prompt(message: str, has_plan: bool) -> PromptBundle:
    user = INTENT_USER.format(has_plan=str(has_plan).lower(), message=message)
    return PromptBundle(system=INTENT_SYSTEM, user=user, template_id="intent")
