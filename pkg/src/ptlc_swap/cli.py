"""Command line entry point: ``ptlc-swap run|vectors|trace-diff``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import vectors
from .chainsim import Trace
from .protocol import SCENARIOS, ScenarioScript, simulate


def _load_script(args) -> ScenarioScript:
    data: dict = {}
    if args.config:
        data = json.loads(Path(args.config).read_text())
        if not isinstance(data, dict):
            raise ValueError("config must be a JSON object")
    if args.scenario:
        data["name"] = args.scenario
        data.pop("scenario", None)
    if args.profile:
        data["profile"] = args.profile
    if args.seed is not None:
        data["seed"] = args.seed
    data.setdefault("name", "happy")
    return ScenarioScript.from_dict(data)


def cmd_run(args) -> int:
    try:
        script = _load_script(args)
    except (ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    result = simulate(script)
    text = result.trace.to_jsonl()
    if args.out:
        Path(args.out).write_text(text)
    elif not args.quiet:
        sys.stdout.write(text)
    end = result.outcome
    summary = f"{script.name} [{script.profile}, seed {script.seed}]: {end['outcome']}" \
              f" btc={end['btc']} eth={end['eth']} atomic={end['atomic']} conserved={end['conserved']}"
    print(summary, file=sys.stderr)
    return 0 if end["atomic"] and end["conserved"] else 1


def cmd_vectors(args) -> int:
    if args.action == "generate":
        records = vectors.generate()
        vectors.write(args.path, records)
        print(f"wrote {len(records)} vectors to {args.path}")
        return 0
    report = vectors.verify_file(args.path)
    for lineno, reason in report.failures:
        print(f"line {lineno}: {reason}")
    print(f"{report.total - len(report.failures)}/{report.total} vectors ok")
    return 0 if report.ok else 1


def first_divergence(a: Trace, b: Trace) -> tuple[int, dict | None, dict | None] | None:
    """Index and both sides of the first differing event, or None if equal.

    Comparison is on decoded JSON, so field order does not matter.
    """
    da = [e.to_dict() for e in a]
    db = [e.to_dict() for e in b]
    for i in range(max(len(da), len(db))):
        ea = da[i] if i < len(da) else None
        eb = db[i] if i < len(db) else None
        if ea != eb:
            return i, ea, eb
    return None


def _load_trace(path: str) -> Trace:
    events = [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]
    return Trace.from_jsonl("\n".join(json.dumps(e, sort_keys=True) for e in events))


def cmd_trace_diff(args) -> int:
    div = first_divergence(_load_trace(args.a), _load_trace(args.b))
    if div is None:
        print("traces identical")
        return 0
    i, ea, eb = div
    print(f"first divergence at event {i}")
    print(f"  a: {json.dumps(ea, sort_keys=True) if ea else '<end of trace>'}")
    print(f"  b: {json.dumps(eb, sort_keys=True) if eb else '<end of trace>'}")
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ptlc-swap", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario and emit its JSON-lines trace")
    run.add_argument("--scenario", choices=SCENARIOS)
    run.add_argument("--profile", choices=("toy", "secp256k1"))
    run.add_argument("--seed", type=int)
    run.add_argument("--config", help="JSON file with name/profile/seed/overrides")
    run.add_argument("--out", help="write the trace here instead of stdout")
    run.add_argument("--quiet", action="store_true", help="do not print the trace")
    run.set_defaults(func=cmd_run)

    vec = sub.add_parser("vectors", help="generate or check known-answer vectors")
    vec.add_argument("action", choices=("generate", "verify"))
    vec.add_argument("path")
    vec.set_defaults(func=cmd_vectors)

    diff = sub.add_parser("trace-diff", help="show the first differing event of two traces")
    diff.add_argument("a")
    diff.add_argument("b")
    diff.set_defaults(func=cmd_trace_diff)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
