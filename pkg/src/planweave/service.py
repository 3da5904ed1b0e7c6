"""Session controller and HTTP API.

One directory per session on disk: ``state.json`` (snapshot) plus
``events.jsonl`` (append-only, totally ordered per session). All mutations
to a session go through its single writer lock; every state change emits at
least one event, so clients never poll for correctness.

Endpoints (UTF-8 JSON):
    POST  /sessions                         -> {"id": ...}
    GET   /sessions/{id}                    -> session state
    POST  /sessions/{id}/messages {text}    -> {"response", "events"}
    PATCH /sessions/{id}/plan {EditOp}      -> {"events"}
    POST  /sessions/{id}/plan/override {node, output, value}
    POST  /sessions/{id}/control {action, node?}
    GET   /sessions/{id}/events[?follow=&after=]  -> SSE stream
"""

from __future__ import annotations

import itertools
import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterator

from fastapi import Body, FastAPI
from fastapi.responses import JSONResponse, StreamingResponse

from planweave.agents import Registry, default_registry
from planweave.edits import EditOp, apply_edit
from planweave.errors import (
    NoActivePlan,
    NodeFailure,
    PlanweaveError,
    PlannerOutputInvalid,
    UnknownSession,
)
from planweave.executor import execute_all, execute_node, override_output
from planweave.llm import LanguageModelClient
from planweave.plan import PlanGraph, Value, parse_plan, serialize_plan
from planweave.planner import (
    ResponseEvent,
    classify_intent,
    fix_plan,
    generate_plan,
    refine_plan,
    render_response,
)

EVENT_KINDS = ("plan_updated", "node_status", "execution_done", "message", "error")


@dataclass
class Event:
    seq: int
    ts: float
    kind: str
    payload: dict[str, Any]

    def to_wire(self) -> dict[str, Any]:
        return {"seq": self.seq, "ts": self.ts, "kind": self.kind, "payload": self.payload}


@dataclass
class SessionState:
    id: str
    messages: list[dict[str, Any]] = field(default_factory=list)
    current_query: str = ""
    plan: PlanGraph | None = None
    base_plan: PlanGraph | None = None  # replay base: last planner/executor state
    edit_log: list[dict[str, Any]] = field(default_factory=list)  # ops since base_plan
    traces: list[dict[str, Any]] = field(default_factory=list)
    next_seq: int = 0

    def to_wire(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "messages": self.messages,
            "current_query": self.current_query,
            "plan": json.loads(serialize_plan(self.plan)) if self.plan else None,
            "base_plan": json.loads(serialize_plan(self.base_plan)) if self.base_plan else None,
            "edit_log": self.edit_log,
            "traces": self.traces,
            "next_seq": self.next_seq,
        }

    @classmethod
    def from_wire(cls, raw: dict[str, Any]) -> "SessionState":
        plan = parse_plan(json.dumps(raw["plan"])) if raw.get("plan") else None
        base = parse_plan(json.dumps(raw["base_plan"])) if raw.get("base_plan") else None
        return cls(
            id=raw["id"],
            messages=list(raw.get("messages", [])),
            current_query=raw.get("current_query", ""),
            plan=plan,
            base_plan=base,
            edit_log=list(raw.get("edit_log", [])),
            traces=list(raw.get("traces", [])),
            next_seq=int(raw.get("next_seq", 0)),
        )


@dataclass
class ServiceConfig:
    registry: Registry = field(default_factory=default_registry)
    lm: LanguageModelClient | None = None
    sessions_dir: Path = Path("sessions")
    clock: Callable[[], float] = time.time
    id_factory: Callable[[], str] = lambda: uuid.uuid4().hex[:12]


def counter_clock(start: float = 0.0, step: float = 1.0) -> Callable[[], float]:
    """Deterministic clock for reproducible event logs."""
    ticker = itertools.count()
    return lambda: start + step * next(ticker)


def sequential_ids(prefix: str = "s") -> Callable[[], str]:
    ticker = itertools.count(1)
    return lambda: f"{prefix}{next(ticker):04d}"


class Session:
    """Holds state plus the single-writer lock and the event condition."""

    def __init__(self, state: SessionState, store: "SessionStore"):
        self.state = state
        self.store = store
        self.lock = threading.RLock()
        self.changed = threading.Condition()
        self.events: list[Event] = []

    def emit(self, kind: str, payload: dict[str, Any], clock: Callable[[], float]) -> Event:
        event = Event(seq=self.state.next_seq, ts=clock(), kind=kind, payload=payload)
        self.state.next_seq += 1
        self.events.append(event)
        self.store.append_event(self.state.id, event)
        with self.changed:
            self.changed.notify_all()
        return event


class SessionStore:
    """Disk persistence: one directory per session."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _dir(self, session_id: str) -> Path:
        return self.root / session_id

    def save_state(self, state: SessionState) -> None:
        directory = self._dir(state.id)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / "state.json"
        path.write_text(
            json.dumps(state.to_wire(), indent=2, ensure_ascii=False, sort_keys=True),
            encoding="utf-8",
        )

    def append_event(self, session_id: str, event: Event) -> None:
        directory = self._dir(session_id)
        directory.mkdir(parents=True, exist_ok=True)
        with (directory / "events.jsonl").open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(event.to_wire(), ensure_ascii=False) + "\n")

    def load_state(self, session_id: str) -> SessionState | None:
        path = self._dir(session_id) / "state.json"
        if not path.is_file():
            return None
        return SessionState.from_wire(json.loads(path.read_text(encoding="utf-8")))

    def load_events(self, session_id: str) -> list[Event]:
        path = self._dir(session_id) / "events.jsonl"
        if not path.is_file():
            return []
        events = []
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                raw = json.loads(line)
                events.append(Event(seq=raw["seq"], ts=raw["ts"], kind=raw["kind"], payload=raw["payload"]))
        return events


class Orchestrator:
    """Routes chat messages, edits, and control actions for all sessions."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.store = SessionStore(config.sessions_dir)
        self.sessions: dict[str, Session] = {}
        self.registry_lock = threading.Lock()

    # -- session lifecycle ------------------------------------------------

    def create_session(self) -> SessionState:
        state = SessionState(id=self.config.id_factory())
        session = Session(state, self.store)
        with self.registry_lock:
            self.sessions[state.id] = session
        self.store.save_state(state)
        return state

    def get_session(self, session_id: str) -> Session:
        with self.registry_lock:
            session = self.sessions.get(session_id)
        if session is None:
            state = self.store.load_state(session_id)
            if state is None:
                raise UnknownSession(session_id)
            session = Session(state, self.store)
            session.events = self.store.load_events(session_id)
            with self.registry_lock:
                self.sessions.setdefault(session_id, session)
                session = self.sessions[session_id]
        return session

    # -- helpers -----------------------------------------------------------

    def _plan_wire(self, plan: PlanGraph) -> dict[str, Any]:
        return json.loads(serialize_plan(plan))

    def _emit_plan(self, session: Session, reason: str) -> Event:
        assert session.state.plan is not None
        return session.emit(
            "plan_updated",
            {"plan": self._plan_wire(session.state.plan), "reason": reason},
            self.config.clock,
        )

    def _add_message(self, session: Session, role: str, text: str) -> Event:
        session.state.messages.append({"role": role, "text": text, "ts": self.config.clock()})
        return session.emit("message", {"role": role, "text": text}, self.config.clock)

    def _set_planner_plan(self, session: Session, plan: PlanGraph, reason: str) -> Event:
        """A planner emission resets the edit-replay base."""
        session.state.plan = plan
        session.state.base_plan = plan
        session.state.edit_log = []
        return self._emit_plan(session, reason)

    def _emit_execution(self, session: Session, plan: PlanGraph, trace_records: list, final_answer: Value, done: bool) -> list[Event]:
        events = []
        for record in trace_records:
            for status, step in record.transitions:
                events.append(
                    session.emit(
                        "node_status",
                        {"node": record.node_id, "status": status, "step": step},
                        self.config.clock,
                    )
                )
        session.state.plan = plan
        session.state.base_plan = plan  # results become part of the replay base
        session.state.edit_log = []
        events.append(self._emit_plan(session, "execution"))
        if done:
            events.append(
                session.emit("execution_done", {"final_answer": final_answer}, self.config.clock)
            )
        return events

    # -- operations ---------------------------------------------------------

    def post_message(self, session_id: str, text: str) -> tuple[str, list[Event]]:
        session = self.get_session(session_id)
        with session.lock:
            events: list[Event] = [self._add_message(session, "user", text)]
            state = session.state
            intent = classify_intent(text, has_plan=state.plan is not None, lm=self.config.lm)
            try:
                if intent.kind == "new_query":
                    state.current_query = intent.text
                    plan = generate_plan(intent.text, self.config.registry, self.config.lm)
                    events.append(self._set_planner_plan(session, plan, "planned"))
                    response = render_response(
                        ResponseEvent(event="planned", plan=plan, query=intent.text), self.config.lm
                    )
                elif intent.kind == "refine_feedback" and state.plan is not None:
                    plan = refine_plan(state.plan, intent.text, self.config.registry, self.config.lm)
                    events.append(self._set_planner_plan(session, plan, "refined"))
                    response = render_response(
                        ResponseEvent(event="refined", plan=plan, query=state.current_query, interaction="feedback"),
                        self.config.lm,
                    )
                elif intent.kind in ("execute_all", "execute_node") and state.plan is not None:
                    node_id = intent.node
                    if intent.kind == "execute_all" or node_id is None:
                        new_plan, trace = execute_all(state.plan, self.config.registry, self.config.lm)
                        events.extend(
                            self._emit_execution(session, new_plan, trace.records, trace.final_answer, done=True)
                        )
                        state.traces.append([r.to_wire() for r in trace.records])
                        answer = trace.final_answer
                    else:
                        new_plan, record = execute_node(state.plan, node_id, self.config.registry, self.config.lm)
                        events.extend(self._emit_execution(session, new_plan, [record], None, done=False))
                        answer = None
                    response = render_response(
                        ResponseEvent(event="executed", plan=state.plan, query=state.current_query, final_answer=answer),
                        self.config.lm,
                    )
                else:
                    response = "There is no plan yet; ask for one first." if state.plan is None else "Noted."
            except PlannerOutputInvalid as exc:
                response = f"Sorry, I could not produce a valid plan: {exc}"
            except PlanweaveError as exc:
                events.append(
                    session.emit("error", {"message": str(exc), "code": type(exc).__name__}, self.config.clock)
                )
                response = f"That failed: {exc}"
            events.append(self._add_message(session, "assistant", response))
            self.store.save_state(session.state)
            return response, events

    def apply_edit_request(self, session_id: str, op: EditOp) -> list[Event]:
        session = self.get_session(session_id)
        with session.lock:
            state = session.state
            if state.plan is None:
                raise NoActivePlan("editing")
            state.plan = apply_edit(state.plan, op)
            state.edit_log.append(
                {"op": op.to_wire(), "provenance": "user_graph_edit", "ts": self.config.clock()}
            )
            event = self._emit_plan(session, f"edit:{op.kind}")
            self.store.save_state(state)
            return [event]

    def apply_override(self, session_id: str, node: int, output: str, value: Value) -> list[Event]:
        session = self.get_session(session_id)
        with session.lock:
            state = session.state
            if state.plan is None:
                raise NoActivePlan("overriding an output")
            new_plan, record = override_output(state.plan, node, output, value)
            state.plan = new_plan
            state.base_plan = new_plan  # overrides mutate results: new replay base
            state.edit_log = []
            event = self._emit_plan(session, f"override:{record.node_id}.{record.output}")
            self.store.save_state(state)
            return [event]

    def control(self, session_id: str, action: str, node: int | None = None) -> tuple[str, list[Event]]:
        session = self.get_session(session_id)
        with session.lock:
            state = session.state
            events: list[Event] = []
            try:
                if action == "execute_all":
                    if state.plan is None:
                        raise NoActivePlan("execute_all")
                    new_plan, trace = execute_all(state.plan, self.config.registry, self.config.lm)
                    state.traces.append([r.to_wire() for r in trace.records])
                    events.extend(
                        self._emit_execution(session, new_plan, trace.records, trace.final_answer, done=True)
                    )
                    response = render_response(
                        ResponseEvent(
                            event="executed",
                            plan=new_plan,
                            query=state.current_query,
                            final_answer=trace.final_answer,
                        ),
                        self.config.lm,
                    )
                elif action == "execute_node":
                    if node is None or state.plan is None:
                        raise NoActivePlan("execute_node (with a node id)")
                    new_plan, record = execute_node(state.plan, node, self.config.registry, self.config.lm)
                    events.extend(self._emit_execution(session, new_plan, [record], None, done=False))
                    response = render_response(
                        ResponseEvent(event="executed", plan=new_plan, query=state.current_query,
                                      final_answer=record.result.outputs if record.result else None),
                        self.config.lm,
                    )
                elif action == "replan":
                    plan = generate_plan(state.current_query, self.config.registry, self.config.lm)
                    events.append(self._set_planner_plan(session, plan, "replanned"))
                    response = render_response(
                        ResponseEvent(event="planned", plan=plan, query=state.current_query), self.config.lm
                    )
                elif action == "help":
                    if state.plan is None:
                        raise NoActivePlan("help")
                    plan = fix_plan(state.current_query, state.plan, self.config.registry, self.config.lm)
                    events.append(self._set_planner_plan(session, plan, "fixed"))
                    response = render_response(
                        ResponseEvent(event="refined", plan=plan, query=state.current_query, interaction="fix"),
                        self.config.lm,
                    )
                else:
                    raise PlanweaveError(f"unknown control action {action!r}")
            except NodeFailure as exc:
                events.append(
                    session.emit(
                        "node_status",
                        {"node": exc.node_id, "status": "failed", "error": str(exc.cause)},
                        self.config.clock,
                    )
                )
                events.append(self._add_message(session, "assistant", f"Node {exc.node_id} failed: {exc.cause}"))
                self.store.save_state(state)
                return f"Node {exc.node_id} failed: {exc.cause}", events
            except PlanweaveError as exc:
                events.append(
                    session.emit(
                        "error",
                        {"message": str(exc), "code": type(exc).__name__, "action": action},
                        self.config.clock,
                    )
                )
                self.store.save_state(state)
                return f"That failed: {exc}", events
            events.append(self._add_message(session, "assistant", response))
            self.store.save_state(state)
            return response, events


def replay_edit_log(state: SessionState) -> PlanGraph | None:
    """Re-apply the edit log to the replay base; must reproduce the live plan."""
    if state.base_plan is None:
        return None
    plan = state.base_plan
    for entry in state.edit_log:
        plan = apply_edit(plan, EditOp.from_wire(entry["op"]))
    return plan


# --- HTTP layer -------------------------------------------------------------


def build_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    orch = Orchestrator(config)
    app = FastAPI(title="planweave", version="0.1.0")
    app.state.orchestrator = orch

    def _error(exc: PlanweaveError, status: int = 400) -> JSONResponse:
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "message": str(exc)},
        )

    @app.post("/sessions")
    def create_session() -> dict[str, str]:
        state = orch.create_session()
        return {"id": state.id}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        try:
            session = orch.get_session(session_id)
        except UnknownSession as exc:
            return _error(exc, 404)
        return session.state.to_wire()

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: dict = Body(...)):
        try:
            response, events = orch.post_message(session_id, body.get("text", ""))
        except UnknownSession as exc:
            return _error(exc, 404)
        return {"response": response, "events": [e.to_wire() for e in events]}

    @app.patch("/sessions/{session_id}/plan")
    def patch_plan(session_id: str, body: dict = Body(...)):
        try:
            op = EditOp.from_wire(body)
        except ValueError as exc:
            return JSONResponse(status_code=400, content={"error": "BadEditOp", "message": str(exc)})
        try:
            events = orch.apply_edit_request(session_id, op)
        except UnknownSession as exc:
            return _error(exc, 404)
        except PlanweaveError as exc:
            session = orch.get_session(session_id)
            event = session.emit(
                "error",
                {"message": str(exc), "code": type(exc).__name__, "op": op.to_wire()},
                config.clock,
            )
            return JSONResponse(
                status_code=400,
                content={"error": type(exc).__name__, "message": str(exc), "events": [event.to_wire()]},
            )
        return {"events": [e.to_wire() for e in events]}

    @app.post("/sessions/{session_id}/plan/override")
    def post_override(session_id: str, body: dict = Body(...)):
        try:
            events = orch.apply_override(session_id, body["node"], body["output"], body.get("value"))
        except UnknownSession as exc:
            return _error(exc, 404)
        except PlanweaveError as exc:
            return _error(exc, 400)
        return {"events": [e.to_wire() for e in events]}

    @app.post("/sessions/{session_id}/control")
    def post_control(session_id: str, body: dict = Body(...)):
        try:
            response, events = orch.control(session_id, body.get("action", ""), body.get("node"))
        except UnknownSession as exc:
            return _error(exc, 404)
        return {"response": response, "events": [e.to_wire() for e in events]}

    @app.get("/sessions/{session_id}/events")
    def event_stream(session_id: str, follow: bool = False, after: int = -1):
        try:
            session = orch.get_session(session_id)
        except UnknownSession as exc:
            return _error(exc, 404)

        def generate() -> Iterator[str]:
            cursor = after + 1
            while True:
                with session.changed:
                    pending = [e for e in session.events if e.seq >= cursor]
                for event in pending:
                    cursor = event.seq + 1
                    yield f"id: {event.seq}\ndata: {json.dumps(event.to_wire(), ensure_ascii=False)}\n\n"
                if not follow:
                    return
                with session.changed:
                    session.changed.wait(timeout=0.5)

        return StreamingResponse(generate(), media_type="text/event-stream")

    return app
