"""Command line entry points.

    duihub run <scenario> [--seed N] [--trace OUT]   run one scripted scenario
    duihub sweep <scenario> --seeds N                convergence sweep over seeds
    duihub serve [--listen ADDR] [--store P] [--auth P]   start the hub
    duihub replay <trace-file>                       verify a captured trace
    duihub adduser --auth P <user> <password>        provision a login

Exit codes: 0 success, 1 scenario/replay/sweep failure, 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from .errors import CorruptStore, DuiHubError, ScenarioError
from .hub import Hub
from .scenario import run_scenario, sweep_interleavings
from .sim import replay_trace
from .store import AuthStore


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="duihub", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario file deterministically")
    run_p.add_argument("scenario")
    run_p.add_argument("--seed", type=int, default=1)
    run_p.add_argument("--trace", metavar="OUT", help="write the captured trace as JSON")
    run_p.add_argument("--duplicates", action="store_true", help="deliver every frame twice")

    sweep_p = sub.add_parser("sweep", help="run a scenario across many interleavings")
    sweep_p.add_argument("scenario")
    sweep_p.add_argument("--seeds", type=int, default=100)
    sweep_p.add_argument("--no-duplicates", action="store_true",
                         help="skip the duplicate-delivery invariance check")
    sweep_p.add_argument("--broken-dedupe", action="store_true",
                         help="fault injection: disable receiver dedupe (expect violations)")

    # flags win over the DUIHUB_* environment, which wins over defaults
    serve_p = sub.add_parser("serve", help="start the hub's WebSocket endpoint")
    serve_p.add_argument("--listen", metavar="HOST:PORT",
                         default=os.environ.get("DUIHUB_LISTEN", "127.0.0.1:8750"))
    serve_p.add_argument("--store", help="collection snapshot path",
                         default=os.environ.get("DUIHUB_STORE", "duihub-store.json"))
    serve_p.add_argument("--auth", help="credential file path",
                         default=os.environ.get("DUIHUB_AUTH", "duihub-auth.json"))

    replay_p = sub.add_parser("replay", help="re-drive a trace and verify reproduction")
    replay_p.add_argument("trace")

    user_p = sub.add_parser("adduser", help="add a login to a credential file")
    user_p.add_argument("--auth", required=True)
    user_p.add_argument("user")
    user_p.add_argument("password")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    with open(args.scenario, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        world = run_scenario(text, seed=args.seed, fault_duplicate=args.duplicates)
    except ScenarioError as exc:
        print(f"scenario failed: {exc}", file=sys.stderr)
        return 1
    try:
        doc = world.trace_document()
        if args.trace:
            with open(args.trace, "w", encoding="utf-8") as fh:
                json.dump(doc, fh, sort_keys=True, indent=1)
            print(f"trace written to {args.trace}")
        accepted = sum(1 for e in doc["entries"] if e["direction"] in ("in", "out"))
        print(f"ok: seed {args.seed}, {accepted} accepted messages, "
              f"{len(doc['sessions'])} sessions")
        return 0
    finally:
        world.cleanup()


def _cmd_sweep(args: argparse.Namespace) -> int:
    with open(args.scenario, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        report = sweep_interleavings(
            text,
            seeds=args.seeds,
            check_duplicates=not args.no_duplicates,
            fault_break_dedupe=args.broken_dedupe,
        )
    except ScenarioError as exc:
        print(f"scenario failed: {exc}", file=sys.stderr)
        return 1
    print(f"{len(report.violations)} violations across {report.seeds} seeds")
    for violation in report.violations[:20]:
        print(f"  seed {violation['seed']} [{violation['kind']}]: {violation['detail'][:400]}")
    return 0 if report.ok else 1


def _cmd_serve(args: argparse.Namespace) -> int:
    host, _, port = args.listen.rpartition(":")
    if not host or not port.isdigit():
        print(f"--listen wants HOST:PORT, got {args.listen!r}", file=sys.stderr)
        return 2
    try:
        hub = Hub(store_path=args.store, auth=AuthStore(args.auth))
    except CorruptStore as exc:
        print(f"refusing to start: {exc}", file=sys.stderr)
        return 1
    from .server import run_server

    run_server(hub, host=host, port=int(port))
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    with open(args.trace, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    ok, detail = replay_trace(doc)
    print(("replay ok: " if ok else "replay FAILED: ") + detail)
    return 0 if ok else 1


def _cmd_adduser(args: argparse.Namespace) -> int:
    try:
        store = AuthStore(args.auth)
    except CorruptStore as exc:
        print(str(exc), file=sys.stderr)
        return 1
    store.register(args.user, args.password)
    print(f"user {args.user!r} registered in {args.auth}")
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "serve":
            return _cmd_serve(args)
        if args.command == "replay":
            return _cmd_replay(args)
        if args.command == "adduser":
            return _cmd_adduser(args)
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except DuiHubError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
