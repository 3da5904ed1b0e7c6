"""Agent registry, builtin implementations, and invocation dispatch."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planweave.agents import (
    AgentInvocation,
    Registry,
    builtin_catalog,
    default_registry,
    execute_agent,
    load_registry,
    render_agent_prompt,
)
from planweave.errors import (
    DivisionByZero,
    DuplicateAgent,
    MalformedRegistry,
    MissingInput,
    NonNumericOperand,
    OutputMismatch,
    UnknownFixture,
    UpstreamFailure,
)
from planweave.llm import PromptBundle, ScriptedClient


def invocation(registry, name, inputs, config=None, task=""):
    return AgentInvocation(spec=registry.get(name), inputs=inputs, config=config or {}, task=task)


class TestLoadRegistry:
    def test_ten_agent_fixture(self, tmp_path):
        names = [
            "add", "subtract", "multiply", "divide", "identify_operands",
            "llm_multiply", "summarize", "extract", "web_search", "filter",
        ]
        specs = {s.name: s for s in builtin_catalog()}
        wire = Registry.from_specs([specs[n] for n in names]).to_wire()
        path = tmp_path / "registry.json"
        path.write_text(json.dumps(wire))
        registry = load_registry(path)
        assert len(registry.agents) == 10
        assert registry.source == str(path)

    def test_duplicate_agent_rejected(self):
        entry = {
            "name": "add", "description": "", "kind": "builtin",
            "inputs": [{"name": "a"}], "outputs": [{"name": "sum"}],
        }
        with pytest.raises(DuplicateAgent):
            load_registry(json.dumps([entry, entry]))

    def test_empty_registry_is_valid(self):
        registry = load_registry("[]")
        assert registry.agents == {}

    def test_garbage_is_malformed(self):
        with pytest.raises(MalformedRegistry):
            load_registry("[{json")

    def test_bad_kind_rejected(self):
        entry = {
            "name": "x", "kind": "quantum",
            "inputs": [{"name": "a"}], "outputs": [{"name": "b"}],
        }
        with pytest.raises(MalformedRegistry):
            load_registry(json.dumps([entry]))


class TestBuiltins:
    def test_add(self, registry):
        result = execute_agent(invocation(registry, "add", [("a", 3), ("b", 4)]))
        assert result.outputs == {"sum": 7}

    def test_subtract_order_significant(self, registry):
        result = execute_agent(invocation(registry, "subtract", [("revenue", 10), ("cost", 4)]))
        assert result.outputs == {"difference": 6}
        flipped = execute_agent(invocation(registry, "subtract", [("cost", 4), ("revenue", 10)]))
        assert flipped.outputs == {"difference": -6}

    def test_add_flattens_list_inputs(self, registry):
        result = execute_agent(invocation(registry, "add", [("numbers", [3, 4])]))
        assert result.outputs == {"sum": 7}

    def test_strict_multiply_rejects_percent_text(self, registry):
        with pytest.raises(NonNumericOperand):
            execute_agent(invocation(registry, "multiply", [("a", 5), ("b", "60%")]))

    def test_llm_multiply_handles_percent_via_model(self, registry, tmp_path):
        lm = ScriptedClient(tmp_path)
        inv = invocation(registry, "llm_multiply", [("a", 5), ("b", "60%")],
                         task="Multiply 5 by 60%.")
        system, user = render_agent_prompt(inv)
        lm.record(PromptBundle(system=system, user=user, template_id="agent"), '{"product": 3}')
        result = execute_agent(inv, lm)
        assert result.outputs == {"product": 3}

    def test_divide_by_zero(self, registry):
        with pytest.raises(DivisionByZero):
            execute_agent(invocation(registry, "divide", [("a", 1), ("b", 0)]))

    def test_divide(self, registry):
        result = execute_agent(invocation(registry, "divide", [("a", 14), ("b", 2)]))
        assert result.outputs == {"quotient": 7}

    def test_percentage_of_text_and_number(self, registry):
        r1 = execute_agent(invocation(registry, "percentage_of", [("p", "60%"), ("v", 5)]))
        r2 = execute_agent(invocation(registry, "percentage_of", [("p", 60), ("v", 5)]))
        assert r1.outputs == {"result": 3} == r2.outputs

    def test_identify_operands_extraction(self, registry):
        query = "A glass costs $5. He buys 16 glasses, every second at 60% price."
        result = execute_agent(invocation(registry, "identify_operands", [("query", query)]))
        operands = result.outputs["operands"]
        assert 5 in operands
        assert 16 in operands
        assert "60%" in operands

    def test_identify_operands_select(self, registry):
        result = execute_agent(
            invocation(registry, "identify_operands", [("query", "use 3 then 4 then 5")],
                       config={"select": [0, 2]})
        )
        assert result.outputs == {"operands": [3, 5]}

    def test_identify_operands_catalog_interface(self):
        spec = {s.name: s for s in builtin_catalog()}["identify_operands"]
        assert [n for n, _ in spec.inputs] == ["query"]
        assert [n for n, _ in spec.outputs] == ["operands"]

    def test_filter_substring(self, registry):
        items = ["MLE - Atlanta, GA", "AI Eng - Palo Alto, CA", "MLE - Atlanta, GA (remote)"]
        result = execute_agent(invocation(registry, "filter", [("items", items), ("criterion", "Atlanta")]))
        assert result.outputs == {"filtered": [items[0], items[2]]}

    def test_concat_strings(self, registry):
        result = execute_agent(invocation(registry, "concat", [("a", "hello"), ("b", "world")]))
        assert result.outputs == {"combined": "hello world"}

    def test_concat_lists(self, registry):
        result = execute_agent(invocation(registry, "concat", [("a", ["x"]), ("b", [2])]))
        assert result.outputs == {"combined": ["x", 2]}

    def test_missing_input_rejected(self, registry):
        with pytest.raises(MissingInput):
            execute_agent(invocation(registry, "add", [("a", 3), ("b", None)]))

    @settings(max_examples=50)
    @given(
        a=st.integers(-999, 999) | st.floats(-1e6, 1e6, allow_nan=False),
        b=st.integers(-999, 999) | st.floats(-1e6, 1e6, allow_nan=False),
    )
    def test_builtins_are_pure(self, registry, a, b):
        inv = invocation(registry, "add", [("a", a), ("b", b)])
        first = execute_agent(inv)
        second = execute_agent(inv)
        assert first.outputs == second.outputs
        mul1 = execute_agent(invocation(registry, "multiply", [("a", a), ("b", b)]))
        mul2 = execute_agent(invocation(registry, "multiply", [("a", a), ("b", b)]))
        assert mul1.outputs == mul2.outputs


class TestDispatch:
    def test_llm_without_client_fails(self, registry):
        with pytest.raises(UpstreamFailure):
            execute_agent(invocation(registry, "summarize", [("items", ["x"])]))

    def test_llm_unknown_fixture_is_loud(self, registry, tmp_path):
        lm = ScriptedClient(tmp_path)
        with pytest.raises(UnknownFixture):
            execute_agent(invocation(registry, "summarize", [("items", ["x"])]), lm)

    def test_llm_output_mismatch(self, registry, tmp_path):
        lm = ScriptedClient(tmp_path)
        inv = invocation(registry, "summarize", [("items", ["x"])], task="Summarize.")
        system, user = render_agent_prompt(inv)
        lm.record(PromptBundle(system=system, user=user, template_id="agent"), '{"wrong_key": 1}')
        with pytest.raises(OutputMismatch):
            execute_agent(inv, lm)

    def test_http_fixture_and_num_results(self, registry, tmp_path, monkeypatch):
        import hashlib

        monkeypatch.setenv("PLANWEAVE_HTTP_FIXTURES", str(tmp_path))
        key = hashlib.sha256(json.dumps(["q"], sort_keys=True).encode()).hexdigest()
        (tmp_path / f"{key}.json").write_text(
            json.dumps({"outputs": {"results": [f"r{i}" for i in range(12)]}})
        )
        five = execute_agent(invocation(registry, "web_search", [("query", "q")]))
        assert len(five.outputs["results"]) == 5
        ten = execute_agent(
            invocation(registry, "web_search", [("query", "q")], config={"num_results": 10})
        )
        assert len(ten.outputs["results"]) == 10

    def test_http_without_fixture_or_endpoint_fails(self, registry, monkeypatch):
        monkeypatch.delenv("PLANWEAVE_HTTP_FIXTURES", raising=False)
        with pytest.raises(UpstreamFailure):
            execute_agent(invocation(registry, "web_search", [("query", "q")]))

    def test_config_merge_invocation_overrides_default(self, registry):
        inv = invocation(registry, "web_search", [("query", "q")], config={"num_results": 9})
        merged = inv.merged_config()
        assert merged["num_results"] == 9
        assert invocation(registry, "web_search", [("query", "q")]).merged_config()["num_results"] == 5


class TestHttpEndpointMode:
    def test_posts_inputs_and_config_and_maps_outputs(self, registry, monkeypatch):
        import httpx

        captured = {}

        def fake_post(url, json=None, timeout=None):
            captured["url"] = url
            captured["json"] = json
            return httpx.Response(
                200,
                json={"outputs": {"results": ["a", "b", "c", "d", "e", "f"]}},
                request=httpx.Request("POST", url),
            )

        monkeypatch.delenv("PLANWEAVE_HTTP_FIXTURES", raising=False)
        monkeypatch.setattr(httpx, "post", fake_post)
        result = execute_agent(
            invocation(registry, "web_search", [("query", "jobs")],
                       config={"endpoint": "http://search.example/api", "num_results": 3})
        )
        assert captured["url"] == "http://search.example/api"
        assert captured["json"]["inputs"] == {"query": "jobs"}
        assert captured["json"]["config"]["num_results"] == 3
        assert result.outputs == {"results": ["a", "b", "c"]}

    def test_endpoint_failure_is_upstream_failure(self, registry, monkeypatch):
        import httpx

        def fake_post(url, **kwargs):
            raise httpx.ConnectError("refused", request=httpx.Request("POST", url))

        monkeypatch.delenv("PLANWEAVE_HTTP_FIXTURES", raising=False)
        monkeypatch.setattr(httpx, "post", fake_post)
        with pytest.raises(UpstreamFailure):
            execute_agent(
                invocation(registry, "web_search", [("query", "q")],
                           config={"endpoint": "http://down.example"})
            )


class TestRegistryOrderIndependence:
    def test_lookup_semantics_ignore_load_order(self, tmp_path):
        specs = builtin_catalog()
        forward = Registry.from_specs(specs).to_wire()
        backward = Registry.from_specs(list(reversed(specs))).to_wire()
        a = load_registry(json.dumps(forward))
        b = load_registry(json.dumps(backward))
        assert set(a.names()) == set(b.names())
        for name in a.names():
            assert a.get(name) == b.get(name)
