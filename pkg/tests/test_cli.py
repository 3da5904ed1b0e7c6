"""CLI commands: exit codes, trace output, report files, serve smoke."""

from __future__ import annotations

import json

import pytest

from planweave.cli import main
from planweave.plan import serialize_plan
from tests.conftest import chain_plan, make_node
from planweave.plan import DataEdge, PlanGraph


@pytest.fixture()
def add_plan_file(tmp_path):
    plan = PlanGraph(
        query="3+4",
        nodes=[
            make_node(1, "identify_operands", inputs=[("query", "what is 3 plus 4")], outputs=["operands"]),
            make_node(2, "add", inputs=[("numbers", None)], outputs=["sum"]),
        ],
        edges=[DataEdge(1, 2, "operands", "numbers")],
    )
    path = tmp_path / "plan.json"
    path.write_text(serialize_plan(plan))
    return path


class TestValidateCommand:
    def test_valid_plan_exits_zero(self, add_plan_file, capsys):
        assert main(["validate", str(add_plan_file)]) == 0
        assert "0 errors" in capsys.readouterr().out

    def test_cyclic_plan_exits_one(self, tmp_path, capsys):
        plan = chain_plan(3)
        plan.edges.append(DataEdge(3, 1, "out", "in"))
        path = tmp_path / "cyclic.json"
        path.write_text(serialize_plan(plan))
        assert main(["validate", str(path)]) == 1
        assert "CYCLE" in capsys.readouterr().out

    def test_missing_file_exits_two(self, tmp_path):
        assert main(["validate", str(tmp_path / "absent.json")]) == 2


class TestRunCommand:
    def test_trace_final_answer_on_last_line(self, add_plan_file, capsys):
        assert main(["run", str(add_plan_file)]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert json.loads(lines[-1]) == {"final_answer": 7}

    def test_single_node_unbound_exits_nonzero(self, add_plan_file, capsys):
        code = main(["run", str(add_plan_file), "--node", "2"])
        assert code != 0
        assert "unbound" in capsys.readouterr().err.lower()

    def test_deterministic_trace(self, add_plan_file, capsys):
        main(["run", str(add_plan_file)])
        first = capsys.readouterr().out
        main(["run", str(add_plan_file)])
        second = capsys.readouterr().out
        assert first == second


class TestEvalCommand:
    def test_dm_fix_simple_kinds_hit_hundred(self, tmp_path, capsys):
        code = main([
            "eval",
            "--mode", "dm_fix",
            "--kinds", "add_node,remove_edge,add_edge,wrong_agent",
            "--out", str(tmp_path),
            "--jobs", "1",
        ])
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        for dataset in ("gsm8k-style", "multistep-style"):
            for kind in ("add_node", "remove_edge", "add_edge", "wrong_agent"):
                cell = report[dataset]["dm_fix"][kind]
                assert cell == {"acc": 100.0, "iso": 100.0, "ged": 0.0}

    def test_vague_echo_iso_zero(self, tmp_path):
        code = main([
            "eval", "--mode", "vague", "--lm", "echo", "--out", str(tmp_path), "--jobs", "1",
        ])
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        for dataset_cells in report.values():
            for kind_cells in dataset_cells["vague"].values():
                assert kind_cells["iso"] == 0.0

    def test_same_seed_identical_bytes(self, tmp_path):
        main(["eval", "--out", str(tmp_path / "a"), "--seed", "7", "--jobs", "2"])
        main(["eval", "--out", str(tmp_path / "b"), "--seed", "7", "--jobs", "4"])
        assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()
        assert (tmp_path / "a" / "report.txt").read_bytes() == (tmp_path / "b" / "report.txt").read_bytes()

    def test_unknown_kind_exits_two(self, tmp_path):
        assert main(["eval", "--kinds", "scramble", "--out", str(tmp_path)]) == 2

    def test_report_schema_stable(self, tmp_path):
        main(["eval", "--mode", "dm_fix", "--kinds", "wrong_agent", "--out", str(tmp_path), "--jobs", "1"])
        report = json.loads((tmp_path / "report.json").read_text())
        assert set(report) == {"gsm8k-style", "multistep-style"}
        cell = report["gsm8k-style"]["dm_fix"]["wrong_agent"]
        assert set(cell) == {"acc", "iso", "ged"}


class TestServeCommand:
    def test_app_serves_sessions(self, tmp_path):
        # exercise the same app the serve command binds, over HTTP semantics
        from fastapi.testclient import TestClient

        from planweave.agents import default_registry
        from planweave.service import ServiceConfig, build_app

        app = build_app(ServiceConfig(registry=default_registry(), sessions_dir=tmp_path))
        client = TestClient(app)
        response = client.post("/sessions")
        assert response.status_code == 200
        assert response.json()["id"]


class TestScriptedLmRun:
    def test_llm_agent_plan_trace_is_byte_deterministic(self, tmp_path, capsys):
        """A plan with a scripted llm agent traces identically across runs."""
        from planweave.agents import AgentInvocation, default_registry, render_agent_prompt
        from planweave.llm import PromptBundle, ScriptedClient

        registry = default_registry()
        plan = PlanGraph(
            query="summarize these items",
            nodes=[
                make_node(1, "concat", inputs=[("a", "alpha"), ("b", "beta")], outputs=["combined"]),
                make_node(
                    2, "summarize", task="Summarize the combined text.",
                    inputs=[("items", None)], outputs=["summary"],
                ),
            ],
            edges=[DataEdge(1, 2, "combined", "items")],
        )
        plan_path = tmp_path / "plan.json"
        plan_path.write_text(serialize_plan(plan))

        fixtures = tmp_path / "lm"
        lm = ScriptedClient(fixtures)
        inv = AgentInvocation(
            spec=registry.get("summarize"),
            inputs=[("items", "alpha beta")],
            task="Summarize the combined text.",
        )
        system, user = render_agent_prompt(inv)
        lm.record(PromptBundle(system=system, user=user, template_id="agent"), '{"summary": "alpha and beta"}')

        args = ["run", str(plan_path), "--lm", "scripted", "--fixtures", str(fixtures)]
        assert main(args) == 0
        first = capsys.readouterr().out
        assert main(args) == 0
        second = capsys.readouterr().out
        assert first == second
        assert json.loads(first.strip().splitlines()[-1]) == {"final_answer": "alpha and beta"}


class TestServeErrors:
    def test_port_in_use_exits_nonzero(self, tmp_path):
        import socket
        import threading

        from planweave.cli import main as cli_main

        blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        blocker.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        blocker.bind(("127.0.0.1", 0))
        blocker.listen(1)
        port = blocker.getsockname()[1]
        try:
            result: list[int] = []

            def run():
                result.append(
                    cli_main([
                        "serve", "--port", str(port), "--sessions-dir", str(tmp_path),
                    ])
                )

            thread = threading.Thread(target=run)
            thread.start()
            thread.join(timeout=15)
            assert not thread.is_alive(), "serve did not exit on bind failure"
            assert result and result[0] != 0
        finally:
            blocker.close()
