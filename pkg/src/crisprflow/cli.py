"""Command-line interface: headless runs and standalone tools.

Thin layer over the same core functions the HTTP service exposes; no domain
logic lives here. Exit codes: 0 success, 2 validation error, 1 runtime
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import autopilot, planner
from .config import PACKAGED_FIXTURES, ServiceConfig, build_engine, load_fixtures
from .engine import AWAITING_ACK, AWAITING_INPUT, COMPLETED
from .errors import (
    CorruptLog,
    CrisprFlowError,
    ProviderError,
    ToolFailure,
)
from .library import ingest_library
from .offtarget import PamRule, off_target_search
from .primers import PrimerConstraints, design_primers
from .providers import ScriptedProvider
from .safety import scan_nucleotide_runs
from .sequences import load_fasta
from .store import SessionStore

_RUNTIME_ERRORS = (ProviderError, ToolFailure, CorruptLog)


def _emit(payload) -> None:
    json.dump(payload, sys.stdout, indent=2, ensure_ascii=False)
    sys.stdout.write("\n")


def _read_text_arg(value: str) -> str:
    if value.startswith("@"):
        return Path(value[1:]).read_text(encoding="utf-8")
    return value


def _provider_from_args(args) -> ScriptedProvider:
    script = getattr(args, "script", None) or (PACKAGED_FIXTURES / "scripts" / "demo_provider.json")
    return ScriptedProvider.from_file(script)


def _load_engine(args):
    fixtures = load_fixtures(getattr(args, "fixtures", None) or PACKAGED_FIXTURES)
    return fixtures, build_engine(fixtures)


def cmd_plan(args) -> int:
    fixtures, _engine = _load_engine(args)
    table = fixtures.registry.task_table()
    provider = _provider_from_args(args)
    plan = planner.decompose(args.request, table, provider)
    _emit(plan.as_dict())
    return 0


def cmd_run(args) -> int:
    fixtures, engine = _load_engine(args)
    table = fixtures.registry.task_table()
    provider = _provider_from_args(args)
    if args.meta_task:
        plan = planner.meta_pipeline(args.meta_task)
    elif args.plan:
        plan = planner.validate_plan([t.strip() for t in args.plan.split(",")], table)
    else:
        plan = planner.decompose(args.request, table, provider)

    session = engine.start_session(args.mode, plan.tasks, args.request)
    store = SessionStore(args.store) if args.store else None
    if store:
        store.sync(session)

    responses = list(args.respond or [])
    meta_prompt = args.meta_prompt or args.request
    transcripts = []
    while session.status in (AWAITING_INPUT, AWAITING_ACK):
        if args.no_autopilot:
            if not responses:
                break
            engine.submit(session, responses.pop(0))
            if store:
                store.sync(session)
            continue
        transcript = autopilot.run_autopilot(
            engine, session, meta_prompt, provider, step_limit=args.step_limit
        )
        transcripts.append(transcript.as_dict())
        if store:
            store.sync(session)
        if transcript.termination != "handoff":
            break
        if not responses:
            break
        engine.submit(session, responses.pop(0))
        if store:
            store.sync(session)

    result = {
        "session_id": session.session_id,
        "status": session.status,
        "plan": plan.as_dict(),
        "transcripts": transcripts,
    }
    if session.status == COMPLETED:
        result["report"] = engine.export_report(session)
    else:
        result["prompt"] = engine.current_prompt(session).as_dict()
    if store:
        store.sync(session)
    _emit(result)
    return 0 if session.status == COMPLETED else 1


def cmd_offtarget(args) -> int:
    references = load_fasta(args.ref)
    rule = PamRule(args.pam, args.pam_side)
    try:
        report = off_target_search(args.guide, references, args.max_mm, rule)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(report.as_dict())
    return 0


def cmd_primers(args) -> int:
    if args.region:
        reference = "".join(_read_text_arg(args.region).split()).upper()
    else:
        references = load_fasta(args.ref)
        if args.record not in references:
            print(f"error: record {args.record!r} not in {args.ref}", file=sys.stderr)
            return 2
        reference = references[args.record]
    if args.span:
        start, end = (int(x) for x in args.span.split(":"))
    else:
        mid = len(reference) // 2
        start, end = mid - 20, mid + 20
    pairs = design_primers(reference, (start, end), PrimerConstraints())
    _emit({"span": [start, end], "pairs": [p.as_dict() for p in pairs]})
    return 0


def cmd_scan(args) -> int:
    text = _read_text_arg(args.text)
    findings = scan_nucleotide_runs(text, args.threshold)
    _emit({"threshold": args.threshold, "findings": [f.as_dict() for f in findings]})
    return 2 if findings else 0


def cmd_ingest(args) -> int:
    library = ingest_library(args.library)
    groups = {
        "|".join(key): len(records) for key, records in sorted(library.groups.items())
    }
    _emit({"records": len(library), "groups": groups})
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = ServiceConfig.from_env()
    if args.fixtures:
        config.fixtures_dir = Path(args.fixtures)
    if args.store:
        config.store_dir = Path(args.store)
    if args.script:
        config.script_path = Path(args.script)
    if args.console:
        config.console_dir = Path(args.console)
    config.host = args.host
    config.port = args.port
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crisprflow",
        description="Guided CRISPR experiment design: sessions, planning and desk-scale design tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a session headlessly (autopilot by default)")
    p.add_argument("--mode", choices=["meta", "auto"], default="meta")
    p.add_argument("--meta-task", help="one of knockout, base_editing, prime_editing, activation_interference")
    p.add_argument("--plan", help="comma-separated task names (skips the planner)")
    p.add_argument("--request", default="", help="the user's request text")
    p.add_argument("--meta-prompt", help="meta request given to the autopilot (defaults to --request)")
    p.add_argument("--script", help="scripted provider JSON (defaults to the packaged demo script)")
    p.add_argument("--fixtures", help="fixtures directory (defaults to packaged fixtures)")
    p.add_argument("--store", help="session store directory (optional persistence)")
    p.add_argument("--step-limit", type=int, default=50)
    p.add_argument("--no-autopilot", action="store_true", help="consume --respond values instead of the agent")
    p.add_argument("--respond", action="append", help="manual response (repeatable; used on handoff)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plan", help="decompose a request into a validated task list")
    p.add_argument("--request", required=True)
    p.add_argument("--provider", choices=["scripted"], default="scripted")
    p.add_argument("--script", help="scripted provider JSON (defaults to the packaged demo script)")
    p.add_argument("--fixtures", help="fixtures directory")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("offtarget", help="scan references for PAM-adjacent near matches")
    p.add_argument("--guide", required=True, help="spacer sequence (18-25 nt)")
    p.add_argument("--ref", required=True, help="reference FASTA")
    p.add_argument("--max-mm", type=int, default=3)
    p.add_argument("--pam", default="NGG")
    p.add_argument("--pam-side", choices=["three_prime", "five_prime"], default="three_prime")
    p.set_defaults(func=cmd_offtarget)

    p = sub.add_parser("primers", help="design validation primers around a span")
    p.add_argument("--ref", help="reference FASTA")
    p.add_argument("--record", help="record id within --ref")
    p.add_argument("--region", help="raw sequence or @file")
    p.add_argument("--span", help="start:end (0-based, half-open)")
    p.set_defaults(func=cmd_primers)

    p = sub.add_parser("scan", help="find long nucleotide runs in text")
    p.add_argument("--text", required=True, help="text or @file")
    p.add_argument("--threshold", type=int, default=20)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("ingest", help="validate a guide library TSV")
    p.add_argument("--library", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--fixtures")
    p.add_argument("--store")
    p.add_argument("--script")
    p.add_argument("--console", help="built web console directory to serve at /console")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _RUNTIME_ERRORS as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except CrisprFlowError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
