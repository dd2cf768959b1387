"""Command-line front end.

    qreduce run SCENARIO.json [--out REPORT.json] [--seed N] [--table]
    qreduce verify-all DIR [--out-dir DIR] [--seed N]

Exit status: 0 all checks pass, 1 a numerical check failed, 2 the scenario
file could not be parsed, 3 the scenario is invalid. Diagnostics go to
stderr as one tab-separated line.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from .scenario import (Report, ScenarioParseError, ScenarioValidationError,
                       emit_distribution_table, run_scenario)

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_INVALID = 0, 1, 2, 3


def _execute(path: Path, seed: Optional[int],
             announce: bool = True) -> tuple[int, Optional[Report]]:
    try:
        report = run_scenario(path, seed=seed)
    except ScenarioParseError as exc:
        print(f"error\tparse\t{_oneline(exc)}", file=sys.stderr)
        return EXIT_PARSE, None
    except ScenarioValidationError as exc:
        print(f"error\tvalidation\t{path}: {_oneline(exc)}", file=sys.stderr)
        return EXIT_INVALID, None
    if report.passed:
        if announce:
            print(f"PASS\t{report.body['scenario']}", file=sys.stderr)
        return EXIT_OK, report
    reason = ",".join(report.failed_checks) or report.body.get("error") or "no checks"
    print(f"FAIL\t{report.body['scenario']}\t{_oneline(reason)}", file=sys.stderr)
    return EXIT_FAIL, report


def _oneline(msg) -> str:
    return " ".join(str(msg).split())


def cmd_run(args) -> int:
    code, report = _execute(Path(args.scenario), args.seed)
    if report is None:
        return code
    if args.out:
        Path(args.out).write_text(report.to_json(), encoding="utf-8")
    elif not args.table:
        sys.stdout.write(report.to_json())
    if args.table:
        sys.stdout.write(emit_distribution_table(report))
    return code


def cmd_verify_all(args) -> int:
    directory = Path(args.directory)
    if not directory.is_dir():
        print(f"error\tparse\t{directory} is not a directory", file=sys.stderr)
        return EXIT_PARSE
    paths = sorted(directory.glob("*.json"))
    if not paths:
        print(f"error\tvalidation\tno scenarios in {directory}", file=sys.stderr)
        return EXIT_INVALID
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    worst = EXIT_OK
    for path in paths:
        code, report = _execute(path, args.seed, announce=False)
        if report is not None and out_dir:
            (out_dir / path.name).write_text(report.to_json(), encoding="utf-8")
        print(f"{path.name}\t{'PASS' if code == EXIT_OK else f'exit {code}'}")
        worst = max(worst, code)
    return worst


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qreduce", description="Run measurement-statistics scenarios and report checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario file")
    run.add_argument("scenario", help="scenario JSON file")
    run.add_argument("--out", help="write the JSON report here instead of stdout")
    run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run.add_argument("--table", action="store_true",
                     help="print the outcome distribution as a tab-separated table")
    run.set_defaults(func=cmd_run)

    va = sub.add_parser("verify-all", help="run every *.json scenario in a directory")
    va.add_argument("directory")
    va.add_argument("--out-dir", help="write one report per scenario here")
    va.add_argument("--seed", type=int, default=None, help="override every scenario seed")
    va.set_defaults(func=cmd_verify_all)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
