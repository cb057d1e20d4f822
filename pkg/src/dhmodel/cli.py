"""Command-line entry point: ``dhmodel run | list-scenarios | verify``.

Exit codes: 0 success, 2 usage or schema error, 3 numerical contract
violation, 4 invariant failure (including failed S/DL/SL/PI checks, oracle
mismatch, or a failed verify sweep).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from .errors import ContractViolation, InvariantFailure, UsageError
from .scenario import BUILTINS, DESCRIPTIONS, load_scenario

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONTRACT = 3
EXIT_INVARIANT = 4


def flatten(record: Any, prefix: str = "") -> list[tuple[str, Any]]:
    """Dotted-key rows for the flat tabular format."""
    if isinstance(record, dict):
        rows = []
        for k, v in record.items():
            rows += flatten(v, f"{prefix}.{k}" if prefix else str(k))
        return rows
    if isinstance(record, list) and any(isinstance(v, (dict, list)) for v in record):
        rows = []
        for i, v in enumerate(record):
            rows += flatten(v, f"{prefix}[{i}]")
        return rows
    return [(prefix, record)]


def render(record: Any, fmt: str) -> str:
    if fmt == "table":
        return "\n".join(f"{k}\t{json.dumps(v)}" for k, v in flatten(record)) + "\n"
    return json.dumps(record, indent=2) + "\n"


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--tolerance", type=float, default=d(None), help="override scenario tolerance")
    parser.add_argument("--oracle", action="store_true", default=d(False), help="force the dense oracle comparison")
    parser.add_argument("--output", default=d(None), help="write the report to this path")
    parser.add_argument("--format", choices=("records", "table"), default=d("records"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dhmodel", description="Heisenberg-picture ontic-state simulator")
    _common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, metavar="{run,list-scenarios,verify}")

    p_run = sub.add_parser("run", help="run a scenario file or built-in")
    _common(p_run, suppress=True)
    p_run.add_argument("scenario", help="path to a JSON/YAML scenario, or a built-in name")

    p_list = sub.add_parser("list-scenarios", help="list built-in scenarios")
    _common(p_list, suppress=True)
    p_list.add_argument("--json", action="store_true", help="machine-readable listing")

    p_ver = sub.add_parser("verify", help="randomized self-verification sweeps")
    _common(p_ver, suppress=True)
    p_ver.add_argument("--max-qubits", type=int, default=5)
    p_ver.add_argument("--depth", type=int, default=20)
    p_ver.add_argument("--trials", type=int, default=200)
    p_ver.add_argument("--seed", type=int, default=42)
    p_ver.add_argument("--witness-dir", default="verify-witnesses")
    return parser


def _cmd_run(args) -> int:
    from .runner import run

    result = run(load_scenario(args.scenario), tolerance=args.tolerance, use_oracle=True if args.oracle else None)
    _emit(render(result.report, args.format), args.output)
    for f in result.failures:
        print(f"invariant failure: {f}", file=sys.stderr)
    return EXIT_OK if result.ok else EXIT_INVARIANT


def _cmd_list(args) -> int:
    if args.json:
        text = json.dumps([{"name": n, "description": d} for n, d in DESCRIPTIONS.items()], indent=2) + "\n"
    else:
        width = max(len(n) for n in BUILTINS)
        text = "".join(f"{n:<{width}}  {d}\n" for n, d in DESCRIPTIONS.items())
    _emit(text, args.output)
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .verify import verify_suite

    summary = verify_suite(args.max_qubits, args.depth, args.trials, args.seed, args.witness_dir)
    _emit(render(summary.to_record(), args.format), args.output)
    for w in summary.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK if summary.passed else EXIT_INVARIANT


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "list-scenarios": _cmd_list, "verify": _cmd_verify}[args.command]
    try:
        return handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ContractViolation as exc:
        print(f"numerical contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except InvariantFailure as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
