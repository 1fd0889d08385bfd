"""Command-line entry point.

Exit status: 0 when everything passes, 1 on any violation or failing
verdict, 2 on configuration, format or replay-integrity errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from . import _build
from .analysis import CHECKS, FAIL, analyze, sessions, summary_json
from .core import MUTATIONS, ConfigurationError, ProtocolError
from .explorer import ExploreConfig, explore
from .sim import Scenario, fairness_audit, load_trace, replay, run, trace_from_path

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None


def _with_mutation(d: dict, mutation: str | None) -> dict:
    if mutation is None:
        if d.get("mutations"):
            _require_mutation_build()
        return d
    d = dict(d)
    d["mutations"] = sorted(set(d.get("mutations", ())) | {mutation})
    return d


def _require_mutation_build() -> None:
    if not _build.ALLOW_MUTATIONS:
        raise ConfigurationError("protocol mutations are disabled in this build")


def _write(path: str | None, text: str) -> None:
    if path is None:
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise ConfigurationError(f"cannot write {path}: {exc.strerror}") from None


def cmd_run(args, mutation=None) -> int:
    sc = Scenario.from_dict(_with_mutation(_read_json(args.scenario), mutation))
    tr = run(sc)
    if args.trace:
        _write(args.trace, "\n".join(tr.lines()) + "\n")
    ss = sessions(tr)
    debts = fairness_audit(tr) if sc.policy == "fair-round-robin" else []
    print(
        f"steps={tr.steps} rounds={tr.rounds_completed} sessions={len(ss)} "
        f"completed={sum(s.completed for s in ss)} violations={len(tr.violations)} "
        f"fairness_debts={len(debts)} quiescent={str(tr.final_state.is_quiescent()).lower()}"
    )
    for step, v in tr.violations[:10]:
        print(f"violation step={step} {v.render()}")
    for d in debts[:10]:
        print(f"fairness_debt {d.render()}")
    return EXIT_FAIL if tr.violations or debts else EXIT_OK


def cmd_explore(args, mutation=None) -> int:
    cfg = ExploreConfig.from_dict(_with_mutation(_read_json(args.config), mutation))
    res = explore(cfg)
    lines = [res.report_line()]
    cex_dir = Path(args.counterexamples) if args.counterexamples else None
    if cex_dir is not None:
        cex_dir.mkdir(parents=True, exist_ok=True)
    found = [(v.render(), path) for v, path in res.violations]
    found += [("deadlock: silent state with a non-idle process", path) for _, path in res.silent_nonidle]
    for k, (what, path) in enumerate(found):
        lines.append(f"counterexample {k}: {what} (length {len(path)})")
        lines.append("  path: " + " ".join(str(a) for a in path))
        if cex_dir is not None:
            tr = trace_from_path(cfg.universe, path, cfg.ae, cfg.mutations)
            tr.dump(cex_dir / f"cex-{k}.trc")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    _write(args.report, text)
    return EXIT_OK if res.ok else EXIT_FAIL


def cmd_analyze(args, mutation=None) -> int:
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    bad = [c for c in checks if c not in CHECKS]
    if bad or not checks:
        raise ConfigurationError(f"--checks must be a non-empty subset of {','.join(CHECKS)}")
    tr = replay(load_trace(args.trace))
    verdicts = analyze(tr, checks)
    for v in verdicts:
        print(v.render())
    summary = summary_json(verdicts)
    print(summary)
    _write(args.json, summary + "\n")
    return EXIT_FAIL if any(v.result == FAIL for v in verdicts) else EXIT_OK


def cmd_replay(args, mutation=None) -> int:
    tr = replay(load_trace(args.trace))
    print(f"replay ok events={len(tr.events)} steps={tr.steps} final={tr.final_state.digest()}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "explore": cmd_explore, "analyze": cmd_analyze, "replay": cmd_replay}


def _add_commands(sub) -> None:
    p = sub.add_parser("run", help="simulate a scenario and record its trace")
    p.add_argument("--scenario", required=True)
    p.add_argument("--trace")

    p = sub.add_parser("explore", help="exhaustively explore a small configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--report")
    p.add_argument("--counterexamples", metavar="DIR", help="write each counterexample as a replayable trace")

    p = sub.add_parser("analyze", help="replay a trace and run behavioral checks")
    p.add_argument("--trace", required=True)
    p.add_argument("--checks", default=",".join(CHECKS))
    p.add_argument("--json", help="also write the JSON summary here")

    p = sub.add_parser("replay", help="re-execute a trace and confirm it is identical")
    p.add_argument("--trace", required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pmx", description="Partial mutual exclusion protocol toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_commands(sub)
    m = sub.add_parser("mutate", help="run a command against a deliberately broken protocol variant")
    m.add_argument("mutation", choices=sorted(MUTATIONS))
    _add_commands(m.add_subparsers(dest="inner", required=True))
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "mutate":
            _require_mutation_build()
            return COMMANDS[args.inner](args, mutation=args.mutation)
        return COMMANDS[args.command](args)
    except (ProtocolError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
