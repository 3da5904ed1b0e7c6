"""Language-model clients behind one small interface.

``LiveClient`` talks to a chat-completion endpoint configured through
environment variables. ``ScriptedClient`` replays canned replies from a
fixture directory keyed by a stable hash of the rendered prompt; an unknown
key is an error, never a silent fallback. ``EchoClient`` answers refine/fix
requests with the plan embedded in the prompt, which gives the evaluation
sweep a fully offline, deterministic baseline planner.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

import httpx

from planweave.errors import TransportError, UnknownFixture

ENV_BASE_URL = "PLANWEAVE_LM_BASE_URL"
ENV_MODEL = "PLANWEAVE_LM_MODEL"
ENV_API_KEY = "PLANWEAVE_LM_API_KEY"


@dataclass(frozen=True)
class PromptBundle:
    system: str
    user: str
    template_id: str  # plan | refine | fix | respond | intent | agent

    def rendered(self) -> str:
        return f"{self.system}\n\n{self.user}"

    def key(self) -> str:
        return prompt_key(self.rendered())


def prompt_key(rendered: str) -> str:
    return hashlib.sha256(rendered.encode("utf-8")).hexdigest()


class LanguageModelClient:
    """Interface: one blocking completion per request."""

    mode = "abstract"

    def complete(self, bundle: PromptBundle) -> str:
        raise NotImplementedError


class LiveClient(LanguageModelClient):
    mode = "live"

    def __init__(
        self,
        base_url: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        timeout_s: float = 60.0,
    ):
        self.base_url = base_url or os.environ.get(ENV_BASE_URL, "")
        self.model = model or os.environ.get(ENV_MODEL, "")
        self.api_key = api_key or os.environ.get(ENV_API_KEY, "")
        self.timeout_s = timeout_s
        if not self.base_url or not self.model:
            raise TransportError(
                f"live mode needs {ENV_BASE_URL} and {ENV_MODEL} set (and usually {ENV_API_KEY})"
            )

    def complete(self, bundle: PromptBundle) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": bundle.system},
                {"role": "user", "content": bundle.user},
            ],
        }
        url = self.base_url.rstrip("/") + "/chat/completions"
        try:
            response = httpx.post(url, json=payload, headers=headers, timeout=self.timeout_s)
            response.raise_for_status()
            body = response.json()
            return body["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise TransportError(f"language-model request failed: {exc}") from exc


class ScriptedClient(LanguageModelClient):
    """Replays fixture files named ``<sha256(rendered prompt)>.txt``."""

    mode = "scripted"

    def __init__(self, fixtures_dir: str | Path):
        self.fixtures_dir = Path(fixtures_dir)

    def complete(self, bundle: PromptBundle) -> str:
        key = bundle.key()
        path = self.fixtures_dir / f"{key}.txt"
        if not path.is_file():
            raise UnknownFixture(key)
        return path.read_text(encoding="utf-8")

    def record(self, bundle: PromptBundle, reply: str) -> Path:
        """Write a fixture for this prompt (used by fixture-builder scripts)."""
        self.fixtures_dir.mkdir(parents=True, exist_ok=True)
        path = self.fixtures_dir / f"{bundle.key()}.txt"
        path.write_text(reply, encoding="utf-8")
        return path


class EchoClient(LanguageModelClient):
    """Returns the plan already present in the prompt, verbatim.

    Models a planner that acknowledges feedback but changes nothing; useful
    as the zero-skill baseline for offline sweeps and determinism checks.
    """

    mode = "echo"

    def complete(self, bundle: PromptBundle) -> str:
        plan_text = _first_json_object(bundle.user)
        if plan_text is None:
            raise TransportError("echo client found no plan object in the prompt")
        return plan_text


def _first_json_object(text: str) -> str | None:
    start = text.find("{")
    while start >= 0:
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
                    candidate = text[start : i + 1]
                    try:
                        json.loads(candidate)
                    except json.JSONDecodeError:
                        break
                    return candidate
        start = text.find("{", start + 1)
    return None


def make_client(mode: str, fixtures_dir: str | Path | None = None) -> LanguageModelClient | None:
    """Factory used by the CLI and service. ``none`` disables llm calls."""
    if mode == "live":
        return LiveClient()
    if mode == "scripted":
        if fixtures_dir is None:
            raise TransportError("scripted mode needs a fixtures directory")
        return ScriptedClient(fixtures_dir)
    if mode == "echo":
        return EchoClient()
    if mode == "none":
        return None
    raise TransportError(f"unknown lm mode {mode!r}")
