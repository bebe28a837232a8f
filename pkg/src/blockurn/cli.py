"""Command-line front end: ``analyze``, ``simulate`` and ``verify``.

Exit codes: 0 success, 1 a verification check failed, 2 unreadable or
malformed input, 3 negative matrix entry, 4 unbalanced rows, 5 bad initial
composition, 6 output path not writable.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
from pathlib import Path

from .canonical import (
    InitialCompositionError,
    NegativeEntryError,
    ReplacementSpec,
    SpecError,
    UnbalancedRowsError,
)
from .report import analyze, build_report
from .urnsim import (
    Tolerances,
    aggregate,
    default_schedule,
    expectation_path,
    run_replications,
    verify,
    write_aggregate_csv,
    write_traces_csv,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_PARSE = 2
EXIT_NEGATIVE = 3
EXIT_UNBALANCED = 4
EXIT_INITIAL = 5
EXIT_OUTPUT = 6


class CLIError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def load_spec(path) -> ReplacementSpec:
    """Read a JSON ``{"matrix": [...], "initial": [...]}`` or a CSV matrix."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CLIError(EXIT_PARSE, f"cannot read {path}: {exc}") from exc
    if path.suffix.lower() == ".csv":
        try:
            rows = [[float(x) for x in row] for row in csv.reader(text.splitlines()) if row]
        except ValueError as exc:
            raise CLIError(EXIT_PARSE, f"{path}: non-numeric CSV entry ({exc})") from exc
        matrix, initial = rows, None
    else:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CLIError(EXIT_PARSE, f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(doc, dict) or "matrix" not in doc:
            raise CLIError(EXIT_PARSE, f'{path}: expected an object with a "matrix" field')
        matrix, initial = doc["matrix"], doc.get("initial")
    if not matrix or any(not isinstance(r, list) or len(r) != len(matrix) for r in matrix):
        raise CLIError(EXIT_PARSE, f"{path}: matrix must be a non-empty square array of rows")
    try:
        return ReplacementSpec.from_arrays(matrix, initial)
    except NegativeEntryError as exc:
        raise CLIError(EXIT_NEGATIVE, str(exc)) from exc
    except UnbalancedRowsError as exc:
        raise CLIError(EXIT_UNBALANCED, str(exc)) from exc
    except InitialCompositionError as exc:
        raise CLIError(EXIT_INITIAL, str(exc)) from exc
    except (SpecError, TypeError, ValueError) as exc:
        raise CLIError(EXIT_PARSE, f"{path}: {exc}") from exc


def parse_checkpoints(text: str | None, steps: int) -> list[int]:
    if text is None or text == "pow2":
        return default_schedule(steps)
    try:
        ns = sorted({int(x) for x in text.split(",") if x.strip()})
    except ValueError as exc:
        raise CLIError(EXIT_PARSE, f"bad checkpoint list {text!r}") from exc
    if ns and (ns[0] < 1 or ns[-1] > steps):
        raise CLIError(EXIT_PARSE, f"checkpoints must lie in [1, {steps}]")
    return ns


def _write_atomic(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise CLIError(EXIT_OUTPUT, f"cannot write {path}: {exc}") from exc


def cmd_analyze(args) -> int:
    spec = load_spec(args.input)
    report = build_report(analyze(spec)).to_dict()
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        _write_atomic(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = load_spec(args.input)
    analyze(spec)
    sched = parse_checkpoints(args.checkpoints, args.steps)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise CLIError(EXIT_OUTPUT, f"cannot write to {out}: {exc}") from exc
    traces = run_replications(spec, args.steps, sched, args.seed, args.reps, args.threads)
    for t in traces:
        write_traces_csv([t], out / f"trace_rep{t.replication_id:04d}.csv")
    if traces:
        write_aggregate_csv(aggregate(traces), out / "aggregate.csv")
    print(f"wrote {len(traces)} trace(s) and aggregate.csv to {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    spec = load_spec(args.input)
    a = analyze(spec)
    sched = parse_checkpoints(args.checkpoints, args.steps)
    if not sched or sched[-1] < 2:
        raise CLIError(EXIT_PARSE, "verify needs at least one checkpoint with N >= 2")
    tols = Tolerances(
        direction=args.tolerance_direction,
        exponent=args.tolerance_exponent,
        ratio=args.tolerance_ratio,
    )
    traces = run_replications(spec, args.steps, sched, args.seed, args.reps, args.threads)
    expect = expectation_path(spec, sched)
    rep = verify(a.profile, a.plan, traces, expect, tols)
    doc = rep.to_dict()
    doc["header"] = {"log": "natural", "steps": args.steps, "reps": args.reps, "seed": args.seed}
    for c in doc["checks"]:
        value = "-" if c["value"] is None else f"{c['value']:.4g}"
        tol = "-" if c["tolerance"] is None else f"{c['tolerance']:.4g}"
        print(f"{c['status']:>7}  {c['name']:<18} value={value:<10} tol={tol:<8} {c['note']}")
    for w in rep.warnings:
        print(f"warning: {w}")
    if args.out:
        _write_atomic(Path(args.out), json.dumps(doc, indent=2) + "\n")
    print("PASS" if rep.passed else "FAIL")
    return EXIT_OK if rep.passed else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blockurn", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="canonical form, rates and limit profile as JSON")
    a.add_argument("input")
    a.add_argument("--out", help="write the report here instead of stdout")
    a.set_defaults(func=cmd_analyze)

    def sim_args(sp, out_default):
        sp.add_argument("input")
        sp.add_argument("--steps", type=int, default=1_000_000)
        sp.add_argument("--reps", type=int, default=20)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--checkpoints", default="pow2", help='"pow2" or a comma-separated list of N')
        sp.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        sp.add_argument("--out", default=out_default)

    s = sub.add_parser("simulate", help="write per-replication and aggregate CSV traces")
    sim_args(s, "traces")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", help="simulate and check predicted rates and limits")
    sim_args(v, None)
    defaults = Tolerances()
    v.add_argument("--tolerance-direction", type=float, default=defaults.direction)
    v.add_argument("--tolerance-exponent", type=float, default=defaults.exponent)
    v.add_argument("--tolerance-ratio", type=float, default=defaults.ratio)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "steps", 0) < 0 or getattr(args, "reps", 1) < 0:
        print("error: --steps and --reps must be nonnegative", file=sys.stderr)
        return EXIT_PARSE
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
