"""Agent registry and single-invocation execution.

Three executor kinds: ``builtin`` (pure deterministic functions), ``llm``
(one completion request rendered from the node's task text and inputs), and
``http`` (POST to a remote endpoint, or a local fixture directory in test
mode so runs are replayable offline).
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import httpx

from planweave.errors import (
    DivisionByZero,
    DuplicateAgent,
    MalformedRegistry,
    MissingInput,
    NonNumericOperand,
    OutputMismatch,
    UnknownAgent,
    UnknownBuiltin,
    UpstreamFailure,
)
from planweave.plan import Value

_NUMBER_RE = re.compile(r"\d+(?:\.\d+)?%?")


@dataclass(frozen=True)
class AgentSpec:
    name: str
    description: str
    inputs: list[tuple[str, str]]  # (name, description)
    outputs: list[tuple[str, str]]
    kind: str = "builtin"  # builtin | llm | http
    default_config: dict[str, Value] = field(default_factory=dict)

    def input_names(self) -> list[str]:
        return [n for n, _ in self.inputs]

    def output_names(self) -> list[str]:
        return [n for n, _ in self.outputs]


@dataclass
class Registry:
    agents: dict[str, AgentSpec]
    source: str = "inline"

    def has(self, name: str) -> bool:
        return name in self.agents

    def get(self, name: str) -> AgentSpec:
        try:
            return self.agents[name]
        except KeyError:
            raise UnknownAgent(name) from None

    def names(self) -> list[str]:
        return list(self.agents)

    @classmethod
    def from_specs(cls, specs: list[AgentSpec], source: str = "inline") -> "Registry":
        agents: dict[str, AgentSpec] = {}
        for spec in specs:
            if spec.name in agents:
                raise DuplicateAgent(spec.name)
            agents[spec.name] = spec
        return cls(agents=agents, source=source)

    def to_wire(self) -> list[dict[str, Any]]:
        return [
            {
                "name": spec.name,
                "description": spec.description,
                "inputs": [{"name": n, "description": d} for n, d in spec.inputs],
                "outputs": [{"name": n, "description": d} for n, d in spec.outputs],
                "kind": spec.kind,
                "config": spec.default_config,
            }
            for spec in self.agents.values()
        ]


@dataclass
class AgentInvocation:
    spec: AgentSpec
    inputs: list[tuple[str, Value]]  # ordered; order is significant
    config: dict[str, Value] = field(default_factory=dict)
    task: str = ""  # node instruction text; rendered into llm prompts

    def merged_config(self) -> dict[str, Value]:
        merged = dict(self.spec.default_config)
        merged.update(self.config)
        return merged


@dataclass
class AgentResult:
    outputs: dict[str, Value]
    trace: str = ""
    duration_s: float = 0.0


# --- registry loading -----------------------------------------------------


def load_registry(source: str | Path) -> Registry:
    """Load a registry from a JSON file path or inline JSON text."""
    text: str
    provenance: str
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("[")):
        path = Path(source)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise MalformedRegistry(f"cannot read registry {path}: {exc}") from exc
        provenance = str(path)
    else:
        text = source
        provenance = "inline"

    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedRegistry(f"registry is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise MalformedRegistry("registry must be a JSON array of agent records")

    specs: list[AgentSpec] = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise MalformedRegistry(f"agents[{i}] must be an object")
        try:
            name = entry["name"]
            description = entry.get("description", "")
            kind = entry.get("kind", "builtin")
            inputs = [(p["name"], p.get("description", "")) for p in entry["inputs"]]
            outputs = [(p["name"], p.get("description", "")) for p in entry["outputs"]]
        except (KeyError, TypeError) as exc:
            raise MalformedRegistry(f"agents[{i}] malformed: {exc}") from exc
        if not isinstance(name, str) or not name:
            raise MalformedRegistry(f"agents[{i}].name must be a non-empty string")
        if kind not in ("builtin", "llm", "http"):
            raise MalformedRegistry(f"agents[{i}].kind must be builtin|llm|http, got {kind!r}")
        if not inputs or not outputs:
            raise MalformedRegistry(f"agents[{i}] must declare at least one input and output")
        specs.append(
            AgentSpec(
                name=name,
                description=description,
                inputs=inputs,
                outputs=outputs,
                kind=kind,
                default_config=dict(entry.get("config", {})),
            )
        )
    return Registry.from_specs(specs, source=provenance)


# --- builtin implementations ----------------------------------------------


def _as_number(value: Value, agent: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise NonNumericOperand(agent, value)
    return float(value)


def _numeric_operands(inputs: list[tuple[str, Value]], agent: str) -> list[float]:
    """Flatten input values in slot order; every element must be numeric."""
    numbers: list[float] = []
    for _, value in inputs:
        items = value if isinstance(value, list) else [value]
        for item in items:
            numbers.append(_as_number(item, agent))
    return numbers


def _simplify(value: float) -> Value:
    return int(value) if float(value).is_integer() else value


def _builtin_add(inv: AgentInvocation) -> dict[str, Value]:
    return {"sum": _simplify(sum(_numeric_operands(inv.inputs, "add")))}


def _builtin_subtract(inv: AgentInvocation) -> dict[str, Value]:
    ops = _numeric_operands(inv.inputs, "subtract")
    if not ops:
        raise MissingInput("subtract", ["a", "b"])
    result = ops[0]
    for op in ops[1:]:
        result -= op
    return {"difference": _simplify(result)}


def _builtin_multiply(inv: AgentInvocation) -> dict[str, Value]:
    result = 1.0
    for op in _numeric_operands(inv.inputs, "multiply"):
        result *= op
    return {"product": _simplify(result)}


def _builtin_divide(inv: AgentInvocation) -> dict[str, Value]:
    ops = _numeric_operands(inv.inputs, "divide")
    if len(ops) < 2:
        raise MissingInput("divide", ["dividend", "divisor"])
    if ops[1] == 0:
        raise DivisionByZero("divide: second operand is zero")
    return {"quotient": _simplify(ops[0] / ops[1])}


def _parse_percent(value: Value, agent: str) -> float:
    if isinstance(value, str) and value.rstrip().endswith("%"):
        try:
            return float(value.rstrip().rstrip("%"))
        except ValueError:
            raise NonNumericOperand(agent, value) from None
    return _as_number(value, agent)


def _builtin_percentage_of(inv: AgentInvocation) -> dict[str, Value]:
    """First operand is the percentage (``60`` or ``"60%"``), second the base."""
    if len(inv.inputs) < 2:
        raise MissingInput("percentage_of", ["percentage", "value"])
    pct = _parse_percent(inv.inputs[0][1], "percentage_of")
    base = _as_number(inv.inputs[1][1], "percentage_of")
    return {"result": _simplify(base * pct / 100.0)}


def _builtin_identify_operands(inv: AgentInvocation) -> dict[str, Value]:
    """Extract numeric tokens from the query text, preserving order.

    Percentage tokens keep their ``%`` suffix as text so downstream agents
    can decide how to treat them. ``config.select`` picks a subset by index.
    """
    if not inv.inputs:
        raise MissingInput("identify_operands", ["query"])
    query = inv.inputs[0][1]
    if not isinstance(query, str):
        raise NonNumericOperand("identify_operands", query)
    operands: list[Value] = []
    for token in _NUMBER_RE.findall(query):
        if token.endswith("%"):
            operands.append(token)
        elif "." in token:
            operands.append(float(token))
        else:
            operands.append(int(token))
    select = inv.merged_config().get("select")
    if isinstance(select, list):
        operands = [operands[i] for i in select if isinstance(i, int) and -len(operands) <= i < len(operands)]
    return {"operands": operands}


def _builtin_filter(inv: AgentInvocation) -> dict[str, Value]:
    """Keep list items whose text contains the criterion (case-insensitive)."""
    if len(inv.inputs) < 2:
        raise MissingInput("filter", ["items", "criterion"])
    items, criterion = inv.inputs[0][1], inv.inputs[1][1]
    if not isinstance(items, list):
        items = [items]
    needle = str(criterion).casefold()
    return {"filtered": [item for item in items if needle in str(item).casefold()]}


def _builtin_concat(inv: AgentInvocation) -> dict[str, Value]:
    """Concatenate inputs: lists are chained, scalars appended in order."""
    combined: list[Value] = []
    for _, value in inv.inputs:
        if isinstance(value, list):
            combined.extend(value)
        elif value is not None:
            combined.append(value)
    if all(isinstance(item, str) for item in combined):
        return {"combined": " ".join(combined)}  # type: ignore[arg-type]
    return {"combined": combined}


_BUILTINS: dict[str, Callable[[AgentInvocation], dict[str, Value]]] = {
    "add": _builtin_add,
    "subtract": _builtin_subtract,
    "multiply": _builtin_multiply,
    "divide": _builtin_divide,
    "percentage_of": _builtin_percentage_of,
    "identify_operands": _builtin_identify_operands,
    "filter": _builtin_filter,
    "concat": _builtin_concat,
}


def builtin_catalog() -> list[AgentSpec]:
    """Specs for the stock agent set: eight deterministic builtins, three
    language-model agents, and the fixture-backed web search.
    """
    return [
        AgentSpec(
            "add",
            "Add numbers. Accepts scalars or lists; returns their sum.",
            inputs=[("a", "first addend or list of addends"), ("b", "second addend")],
            outputs=[("sum", "the total")],
        ),
        AgentSpec(
            "subtract",
            "Subtract the later operands from the first. Input order matters.",
            inputs=[("a", "minuend"), ("b", "subtrahend")],
            outputs=[("difference", "a minus b")],
        ),
        AgentSpec(
            "multiply",
            "Multiply numbers. Accepts scalars or lists; rejects non-numeric operands.",
            inputs=[("a", "first factor or list of factors"), ("b", "second factor")],
            outputs=[("product", "the product")],
        ),
        AgentSpec(
            "divide",
            "Divide the first operand by the second. Input order matters.",
            inputs=[("a", "dividend"), ("b", "divisor")],
            outputs=[("quotient", "a divided by b")],
        ),
        AgentSpec(
            "percentage_of",
            "Take a percentage of a value; the percentage may be '60%' or 60.",
            inputs=[("percentage", "percentage, number or '%' text"), ("value", "base value")],
            outputs=[("result", "value scaled by percentage/100")],
        ),
        AgentSpec(
            "identify_operands",
            "Extract the numeric operands (and percentage tokens) from a query text, in order.",
            inputs=[("query", "the full query text, repeated verbatim")],
            outputs=[("operands", "list of extracted operands")],
        ),
        AgentSpec(
            "filter",
            "Keep list items that mention a criterion substring.",
            inputs=[("items", "list to filter"), ("criterion", "substring to require")],
            outputs=[("filtered", "items matching the criterion")],
        ),
        AgentSpec(
            "concat",
            "Concatenate texts or lists in input order.",
            inputs=[("a", "first part"), ("b", "second part")],
            outputs=[("combined", "the concatenation")],
        ),
        AgentSpec(
            "llm_multiply",
            "Multiply quantities with a language model; tolerates units and percentages.",
            inputs=[("a", "first factor"), ("b", "second factor")],
            outputs=[("product", "the product")],
            kind="llm",
        ),
        AgentSpec(
            "summarize",
            "Summarize text or a list of items into a short answer.",
            inputs=[("items", "content to summarize")],
            outputs=[("summary", "short natural-language summary")],
            kind="llm",
        ),
        AgentSpec(
            "extract",
            "Extract structured items from raw text per the task instruction.",
            inputs=[("text", "raw source text")],
            outputs=[("items", "list of extracted items")],
            kind="llm",
        ),
        AgentSpec(
            "web_search",
            "Search the web and return result snippets.",
            inputs=[("query", "search query")],
            outputs=[("results", "list of result snippets")],
            kind="http",
            default_config={"num_results": 5},
        ),
    ]


def default_registry() -> Registry:
    return Registry.from_specs(builtin_catalog(), source="builtin")


# --- llm / http dispatch ----------------------------------------------------


def render_agent_prompt(inv: AgentInvocation) -> tuple[str, str]:
    """Render the (system, user) pair for an llm-kind invocation.

    Kept byte-stable: scripted fixtures are keyed by a hash of this text.
    """
    system = (
        "You are the agent {name}: {description}\n"
        "Respond with a single JSON object whose keys are exactly: {outputs}.\n"
        "Do not add commentary."
    ).format(
        name=inv.spec.name,
        description=inv.spec.description,
        outputs=", ".join(inv.spec.output_names()),
    )
    lines = [f"Task: {inv.task or inv.spec.description}"]
    lines.append("Inputs:")
    for name, value in inv.inputs:
        lines.append(f"- {name}: {json.dumps(value, ensure_ascii=False)}")
    config = inv.merged_config()
    if config:
        lines.append(f"Settings: {json.dumps(config, sort_keys=True, ensure_ascii=False)}")
    return system, "\n".join(lines)


def _extract_json_object(text: str) -> dict[str, Any]:
    from planweave.plan import _strip_wrapping  # same fence/prose tolerance as plans

    body = _strip_wrapping(text)
    try:
        raw = json.loads(body)
    except json.JSONDecodeError as exc:
        raise UpstreamFailure(f"agent reply is not JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise UpstreamFailure("agent reply must be a JSON object")
    return raw


def _run_llm(inv: AgentInvocation, lm: Any) -> dict[str, Value]:
    from planweave.llm import PromptBundle

    system, user = render_agent_prompt(inv)
    reply = lm.complete(PromptBundle(system=system, user=user, template_id="agent"))
    raw = _extract_json_object(reply)
    return {name: raw.get(name) for name in raw}


def _fixture_key(inputs: list[tuple[str, Value]]) -> str:
    payload = json.dumps([v for _, v in inputs], sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


ENV_HTTP_FIXTURES = "PLANWEAVE_HTTP_FIXTURES"


def _run_http(inv: AgentInvocation) -> dict[str, Value]:
    config = inv.merged_config()
    # test mode: replies come from a local fixture directory so sessions are
    # replayable offline; the env var keeps paths out of plan/registry data
    fixture_dir = config.get("fixture_dir") or os.environ.get(ENV_HTTP_FIXTURES)
    if fixture_dir:
        path = Path(str(fixture_dir)) / f"{_fixture_key(inv.inputs)}.json"
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise UpstreamFailure(f"no HTTP fixture at {path}") from exc
        outputs = raw.get("outputs", raw)
    else:
        endpoint = config.get("endpoint")
        if not endpoint:
            raise UpstreamFailure(f"http agent {inv.spec.name!r} has neither endpoint nor fixture_dir")
        try:
            response = httpx.post(
                str(endpoint),
                json={"inputs": dict(inv.inputs), "config": config},
                timeout=float(config.get("timeout_s", 30.0)),
            )
            response.raise_for_status()
            outputs = response.json().get("outputs", {})
        except httpx.HTTPError as exc:
            raise UpstreamFailure(f"http agent {inv.spec.name!r} failed: {exc}") from exc
    if inv.spec.name == "web_search" and isinstance(outputs.get("results"), list):
        limit = config.get("num_results")
        if isinstance(limit, int) and limit >= 0:
            outputs = {"results": outputs["results"][:limit]}
    return outputs


def execute_agent(inv: AgentInvocation, lm: Any = None) -> AgentResult:
    """Run one agent invocation, dispatching on the spec's executor kind."""
    unbound = [name for name, value in inv.inputs if value is None]
    if not inv.inputs or unbound:
        raise MissingInput(inv.spec.name, unbound or inv.spec.input_names())

    started = time.perf_counter()
    if inv.spec.kind == "builtin":
        impl = _BUILTINS.get(inv.spec.name)
        if impl is None:
            raise UnknownBuiltin(inv.spec.name)
        outputs = impl(inv)
        trace = f"builtin {inv.spec.name}({', '.join(n for n, _ in inv.inputs)})"
    elif inv.spec.kind == "llm":
        if lm is None:
            raise UpstreamFailure(f"agent {inv.spec.name!r} needs a language-model client")
        outputs = _run_llm(inv, lm)
        trace = f"llm {inv.spec.name} via {type(lm).__name__}"
    elif inv.spec.kind == "http":
        outputs = _run_http(inv)
        trace = f"http {inv.spec.name}"
    else:
        raise UnknownBuiltin(inv.spec.name)
    duration = time.perf_counter() - started

    expected = inv.spec.output_names()
    if sorted(outputs) != sorted(expected):
        raise OutputMismatch(inv.spec.name, expected, sorted(outputs))
    return AgentResult(outputs=outputs, trace=f"{trace} [{duration * 1000:.1f}ms]", duration_s=duration)
