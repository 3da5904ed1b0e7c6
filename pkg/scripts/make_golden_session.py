#!/usr/bin/env python3
"""Build the scripted fixtures and golden event log for the job-search
session replay test.

The session is driven through the real HTTP API with a deterministic clock
and id factory. Language-model calls hit a recording client that serves
canned replies (writing each one into the fixture directory keyed by prompt
hash); the web-search agent reads a local fixture keyed by query hash.

Outputs (committed):
    fixtures/lm/<sha256>.txt          scripted model replies
    fixtures/web/<sha256>.json        canned search results
    tests/golden/job_search_events.jsonl
    tests/golden/job_search_script.json   the request script the test replays
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import sys
from pathlib import Path

from fastapi.testclient import TestClient

from planweave.agents import default_registry
from planweave.llm import LanguageModelClient, PromptBundle
from planweave.service import ServiceConfig, build_app, counter_clock, sequential_ids

ROOT = Path(__file__).resolve().parents[1]
LM_FIXTURES = ROOT / "fixtures" / "lm"
WEB_FIXTURES = ROOT / "fixtures" / "web"
GOLDEN_DIR = ROOT / "tests" / "golden"

QUERY = "Help me find a job in Atlanta. I am looking for MLE or AI engineering positions."
SEARCH_QUERY = "MLE or AI engineer jobs in Atlanta"
NEW_TASK = (
    "Extract the job title, company, and application link from the search results. "
    "Include the location and remote possibility."
)
FEEDBACK = "Filter out jobs that are not in Atlanta"

SEARCH_RESULTS = [
    "Machine Learning Engineer - Peach AI - Atlanta, GA - apply at peach.ai/careers/142",
    "AI Engineer - Tesla - Palo Alto, CA - apply at tesla.com/careers/8821",
    "Senior MLE - Delta Analytics - Atlanta, GA - apply at delta-analytics.com/jobs/17",
    "ML Platform Engineer - RoboHub - Atlanta, GA - apply at robohub.io/join/55",
    "AI Engineer - MintBank - Atlanta, GA - apply at mintbank.com/careers/231",
    "Machine Learning Engineer - NovaMed - Remote (US) - apply at novamed.health/jobs/9",
    "MLE, Recommendations - ShopStream - Atlanta, GA - apply at shopstream.dev/roles/3",
    "Applied Scientist - Forestry AI - Savannah, GA - apply at forestry.ai/careers/12",
    "AI Infrastructure Engineer - GridWorks - Atlanta, GA - apply at gridworks.energy/jobs/77",
    "Machine Learning Engineer - CineCast - Atlanta, GA - apply at cinecast.tv/careers/29",
    "AI Engineer, NLP - Lexicon Labs - Decatur, GA - apply at lexiconlabs.com/jobs/41",
    "MLE Intern - Hartsfield Logistics - Atlanta, GA - apply at hartsfield.io/careers/6",
]

PLAN_REPLY = """Here is a plan for the job search:
```json
{
  "nodes": [
    {"id": 1, "name": "web_search",
     "task": "Search the web for MLE or AI engineering job postings in Atlanta.",
     "input": [["query", "MLE or AI engineer jobs in Atlanta"]],
     "output": ["search_results"],
     "config": {"num_results": 5}},
    {"id": 2, "name": "extract",
     "task": "Extract the job title, company, and application link from the search results.",
     "input": [["text", null]],
     "output": ["jobs"]},
    {"id": 3, "name": "summarize",
     "task": "Summarize the extracted jobs into a short list for the user.",
     "input": [["items", null]],
     "output": ["summary"]}
  ],
  "edges": [
    {"src_node": 1, "dest_node": 2, "src_output": "search_results", "dest_input": "text"},
    {"src_node": 2, "dest_node": 3, "src_output": "jobs", "dest_input": "items"}
  ]
}
```
"""

REFINE_REPLY = """```json
{
  "nodes": [
    {"id": 1, "name": "web_search",
     "task": "Search the web for MLE or AI engineering job postings in Atlanta.",
     "input": [["query", "MLE or AI engineer jobs in Atlanta"]],
     "output": ["search_results"],
     "config": {"num_results": 5}},
    {"id": 2, "name": "extract",
     "task": "Extract the job title, company, and application link from the search results. Include the location and remote possibility.",
     "input": [["text", null]],
     "output": ["jobs"]},
    {"id": 4, "name": "filter",
     "task": "Keep only the jobs located in Atlanta.",
     "input": [["items", null], ["criterion", "Atlanta"]],
     "output": ["filtered"]},
    {"id": 3, "name": "summarize",
     "task": "Summarize the extracted jobs into a short list for the user.",
     "input": [["items", null]],
     "output": ["summary"]}
  ],
  "edges": [
    {"src_node": 1, "dest_node": 2, "src_output": "search_results", "dest_input": "text"},
    {"src_node": 2, "dest_node": 4, "src_output": "jobs", "dest_input": "items"},
    {"src_node": 4, "dest_node": 3, "src_output": "filtered", "dest_input": "items"}
  ]
}
```
"""


def extract_reply(snippets: list[str], with_location: bool) -> str:
    jobs = []
    for snippet in snippets:
        parts = [p.strip() for p in snippet.split(" - ")]
        title, company, location = parts[0], parts[1], parts[2]
        link = parts[3].replace("apply at ", "")
        if with_location:
            remote = "yes" if "Remote" in location else "no"
            jobs.append(f"{title} at {company} ({location}; remote: {remote}) -> {link}")
        else:
            jobs.append(f"{title} at {company} -> {link}")
    return json.dumps({"items": jobs}, ensure_ascii=False, indent=2)


def summarize_reply(count: int) -> str:
    return json.dumps(
        {"summary": f"Found {count} machine learning and AI engineering roles; top matches are listed with application links."},
        ensure_ascii=False,
    )


class RecordingClient(LanguageModelClient):
    """Serves canned replies and records each under its prompt hash."""

    mode = "scripted"

    def __init__(self, fixtures_dir: Path):
        self.fixtures_dir = fixtures_dir
        self.fixtures_dir.mkdir(parents=True, exist_ok=True)

    def complete(self, bundle: PromptBundle) -> str:
        path = self.fixtures_dir / f"{bundle.key()}.txt"
        if path.is_file():
            return path.read_text(encoding="utf-8")
        reply = self._oracle(bundle)
        path.write_text(reply, encoding="utf-8")
        return reply

    def _oracle(self, bundle: PromptBundle) -> str:
        if bundle.template_id == "plan":
            return PLAN_REPLY
        if bundle.template_id == "refine":
            return REFINE_REPLY
        if bundle.template_id == "agent":
            if "the agent extract" in bundle.system:
                count = bundle.user.count("apply at")
                with_location = "location and remote possibility" in bundle.user
                return extract_reply(SEARCH_RESULTS[:count], with_location)
            if "the agent summarize" in bundle.system:
                count = bundle.user.count("->")
                return summarize_reply(count)
        raise RuntimeError(f"no canned reply for template {bundle.template_id!r}:\n{bundle.user[:400]}")


def write_web_fixture() -> None:
    WEB_FIXTURES.mkdir(parents=True, exist_ok=True)
    key = hashlib.sha256(json.dumps([SEARCH_QUERY], sort_keys=True, ensure_ascii=False).encode("utf-8")).hexdigest()
    payload = {"outputs": {"results": SEARCH_RESULTS}}
    (WEB_FIXTURES / f"{key}.json").write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def session_script() -> list[dict]:
    """The request sequence the golden test replays, as data."""
    return [
        {"method": "POST", "path": "/sessions", "body": None},
        {"method": "POST", "path": "/sessions/{id}/messages", "body": {"text": QUERY}},
        {"method": "POST", "path": "/sessions/{id}/control", "body": {"action": "execute_all"}},
        {"method": "PATCH", "path": "/sessions/{id}/plan", "body": {"kind": "set_config", "node": 1, "config": {"num_results": 10}}},
        {"method": "PATCH", "path": "/sessions/{id}/plan", "body": {"kind": "set_task", "node": 2, "task": NEW_TASK}},
        {"method": "POST", "path": "/sessions/{id}/control", "body": {"action": "execute_node", "node": 2}},
        {"method": "POST", "path": "/sessions/{id}/messages", "body": {"text": FEEDBACK}},
    ]


def replay(sessions_dir: Path, lm: LanguageModelClient) -> Path:
    config = ServiceConfig(
        registry=default_registry(),
        lm=lm,
        sessions_dir=sessions_dir,
        clock=counter_clock(),
        id_factory=sequential_ids(),
    )
    app = build_app(config)
    client = TestClient(app)
    session_id = ""
    for step in session_script():
        path = step["path"].replace("{id}", session_id)
        response = client.request(step["method"], path, json=step["body"])
        assert response.status_code == 200, f"{step}: {response.status_code} {response.text}"
        if step["path"] == "/sessions":
            session_id = response.json()["id"]
    return sessions_dir / session_id / "events.jsonl"


def main() -> int:
    os.environ["PLANWEAVE_HTTP_FIXTURES"] = str(WEB_FIXTURES)
    write_web_fixture()

    scratch = ROOT / ".golden-scratch"
    if scratch.exists():
        shutil.rmtree(scratch)

    events_path = replay(scratch / "record", RecordingClient(LM_FIXTURES))

    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    golden = GOLDEN_DIR / "job_search_events.jsonl"
    golden.write_bytes(events_path.read_bytes())
    (GOLDEN_DIR / "job_search_script.json").write_text(
        json.dumps(session_script(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )

    # verify: a second replay against the recorded fixtures reproduces the log
    from planweave.llm import ScriptedClient

    check_path = replay(scratch / "check", ScriptedClient(LM_FIXTURES))
    if check_path.read_bytes() != golden.read_bytes():
        print("replay mismatch: scripted rerun differs from recorded log", file=sys.stderr)
        return 1
    shutil.rmtree(scratch)

    events = [json.loads(line) for line in golden.read_text().splitlines()]
    print(f"golden log: {len(events)} events")
    for event in events:
        print(f"  seq={event['seq']:>2} ts={event['ts']:>4} {event['kind']}")
    print(f"lm fixtures: {sorted(p.name for p in LM_FIXTURES.glob('*.txt'))}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
