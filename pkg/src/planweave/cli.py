"""Command line entry points: validate, run, eval, serve.

Exit codes: 0 ok, 1 domain failure (invalid plan, node failure), 2 usage or
I/O error. Everything is deterministic under scripted/echo lm modes and a
fixed master seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from planweave.agents import Registry, default_registry, load_registry
from planweave.errors import PlanweaveError, TransportError
from planweave.executor import execute_all, execute_node
from planweave.harness import (
    CORRUPTION_KINDS,
    FEEDBACK_MODES,
    SweepConfig,
    aggregate,
    load_corpus,
    render_table,
    run_sweep,
    write_report,
)
from planweave.llm import make_client
from planweave.plan import parse_plan, validate

DATA_DIR = Path(__file__).parent / "data"


def _load_registry(path: str | None) -> Registry:
    if path is None:
        return default_registry()
    return load_registry(Path(path))


def _read_plan(path: str):
    text = Path(path).read_text(encoding="utf-8")
    return parse_plan(text)


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        plan = _read_plan(args.plan)
        registry = _load_registry(args.registry)
    except (OSError, PlanweaveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = validate(plan, registry)
    print(report.summary())
    return 0 if report.ok else 1


def cmd_run(args: argparse.Namespace) -> int:
    try:
        plan = _read_plan(args.plan)
        registry = _load_registry(args.registry)
        lm = make_client(args.lm, args.fixtures)
    except (OSError, PlanweaveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.node is not None:
            executed, record = execute_node(plan, args.node, registry, lm)
            print(json.dumps(record.to_wire(), ensure_ascii=False))
            return 0
        executed, trace = execute_all(plan, registry, lm)
        print(trace.to_jsonl())
        if any(r.error for r in trace.records):
            return 1
        return 0
    except PlanweaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def cmd_eval(args: argparse.Namespace) -> int:
    try:
        registry = _load_registry(args.registry)
        corpus_path = args.corpus or str(DATA_DIR / "corpus.json")
        cases = load_corpus(corpus_path, registry)
        lm = make_client(args.lm, args.fixtures)
    except (OSError, ValueError, PlanweaveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    kinds = tuple(args.kinds.split(",")) if args.kinds else CORRUPTION_KINDS
    modes = tuple(args.mode.split(",")) if args.mode else FEEDBACK_MODES
    for kind in kinds:
        if kind not in CORRUPTION_KINDS:
            print(f"error: unknown corruption kind {kind!r}", file=sys.stderr)
            return 2
    for mode in modes:
        if mode not in FEEDBACK_MODES:
            print(f"error: unknown feedback mode {mode!r}", file=sys.stderr)
            return 2

    jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    config = SweepConfig(kinds=kinds, modes=modes, master_seed=args.seed, jobs=jobs)
    results = run_sweep(cases, registry, lm=lm, config=config)
    report = aggregate(results)
    json_path, text_path = write_report(report, args.out)
    print(render_table(report))
    failures = [r for r in results if r.error]
    print(f"{len(results)} runs, {len(failures)} with recorded errors")
    print(f"wrote {json_path} and {text_path}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from planweave.service import ServiceConfig, build_app

    try:
        registry = _load_registry(args.registry)
        lm = make_client(args.lm_mode, args.fixtures)
    except (OSError, PlanweaveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    config = ServiceConfig(registry=registry, lm=lm, sessions_dir=Path(args.sessions_dir))
    app = build_app(config)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except (OSError, SystemExit) as exc:
        print(f"error: could not serve on port {args.port}: {exc}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="planweave", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="validate a plan file against a registry")
    p_validate.add_argument("plan", help="plan JSON file")
    p_validate.add_argument("--registry", help="registry JSON file (default: builtin catalog)")
    p_validate.set_defaults(func=cmd_validate)

    p_run = sub.add_parser("run", help="execute a plan (or one node) and print the trace")
    p_run.add_argument("plan", help="plan JSON file")
    p_run.add_argument("--registry", help="registry JSON file (default: builtin catalog)")
    p_run.add_argument("--node", type=int, help="run a single node id")
    p_run.add_argument("--lm", default="none", choices=["none", "live", "scripted", "echo"])
    p_run.add_argument("--fixtures", help="scripted lm fixtures directory")
    p_run.set_defaults(func=cmd_run)

    p_eval = sub.add_parser("eval", help="run the plan-refinement benchmark sweep")
    p_eval.add_argument("--corpus", help="corpus JSON file (default: packaged desk corpus)")
    p_eval.add_argument("--registry", help="registry JSON file (default: builtin catalog)")
    p_eval.add_argument("--mode", help="comma-separated feedback modes (default: all)")
    p_eval.add_argument("--kinds", help="comma-separated corruption kinds (default: all)")
    p_eval.add_argument("--seed", type=int, default=0, help="master seed")
    p_eval.add_argument("--lm", default="echo", choices=["none", "live", "scripted", "echo"])
    p_eval.add_argument("--fixtures", help="scripted lm fixtures directory")
    p_eval.add_argument("--out", default="eval-out", help="report output directory")
    p_eval.add_argument("--jobs", type=int, help="worker threads (default: logical cores)")
    p_eval.set_defaults(func=cmd_eval)

    p_serve = sub.add_parser("serve", help="serve the orchestrator HTTP API")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8787)
    p_serve.add_argument("--registry", help="registry JSON file (default: builtin catalog)")
    p_serve.add_argument("--lm-mode", default="none", choices=["none", "live", "scripted", "echo"])
    p_serve.add_argument("--fixtures", help="scripted lm fixtures directory")
    p_serve.add_argument("--sessions-dir", default="sessions", help="session persistence directory")
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TransportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
