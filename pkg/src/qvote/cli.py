"""
Command-line front end.

Subcommands:
    qvote run --config PATH [--seed N] --out DIR
    qvote attack --config PATH --type SUITE [--out DIR]
    qvote verify PATH

Exit codes:
    0 success (completed run, all security rows pass, consistent trace)
    1 invalid input (unreadable or invalid scenario, unknown suite)
    2 election aborted, or at least one security row not passing
    3 corrupted trace
"""

import argparse
import json
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from loguru import logger
from pydantic import ValidationError

from qvote import __version__
from qvote.config import get_settings
from qvote.core.logging import configure_logger
from qvote.domain.exceptions import QVoteError
from qvote.infrastructure import InfrastructureFactory
from qvote.models.config import ScenarioConfig
from qvote.models.errors import ProblemDetail
from qvote.models.report import ElectionReport, SecurityReport
from qvote.services.artifacts import SECURITY_NAME, store_model, store_run
from qvote.services.protocol import ElectionRun, run_election
from qvote.services.security_suite import SUITES, run_security_suite
from qvote.services.trace import verify_trace

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILED = 2
EXIT_CORRUPTED = 3

SUITE_NAMES = ["all", *SUITES]


class CliError(Exception):
    """Carries a ProblemDetail to print before exiting."""

    def __init__(self, problem: ProblemDetail):
        self.problem = problem
        super().__init__(problem.detail or problem.title)


def _emit_problem(problem: ProblemDetail) -> None:
    sys.stderr.write(problem.model_dump_json(exclude_none=True) + "\n")


def load_scenario(path: str, seed: int | None = None) -> ScenarioConfig:
    """
    Read and validate a scenario file.

    Args:
        path: JSON scenario path
        seed: Seed overriding the one in the file

    Returns:
        ScenarioConfig

    Raises:
        CliError: If the file is unreadable, not JSON, or invalid
    """
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CliError(
            ProblemDetail(
                title="Unreadable scenario",
                status=EXIT_INVALID,
                detail=str(e),
                instance=path,
            )
        ) from e
    try:
        data: Any = json.loads(raw)
    except json.JSONDecodeError as e:
        raise CliError(
            ProblemDetail(
                title="Invalid scenario",
                status=EXIT_INVALID,
                detail=f"not JSON: {e}",
                instance=path,
            )
        ) from e
    if not isinstance(data, dict):
        raise CliError(
            ProblemDetail(
                title="Invalid scenario",
                status=EXIT_INVALID,
                detail="scenario must be a JSON object",
                instance=path,
            )
        )
    if seed is not None:
        data["seed"] = seed
    data.setdefault("tick_limit", get_settings().default_tick_limit)
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        raise CliError(ProblemDetail.from_validation_error(e, instance=path)) from e


def _repository(out: str | None):
    factory = InfrastructureFactory.from_settings(get_settings())
    return factory.get_artifact_repository(out)


def format_report(report: ElectionReport) -> str:
    lines = [
        f"voters    {report.n_voters}",
        f"miners    {report.m_miners}",
        f"mode      {report.commitment_mode.value} (p_detect={report.p_detect})",
    ]
    if report.aborted and report.abort_reason is not None:
        culprits = ", ".join(report.culprits) or "-"
        lines.append(f"aborted   {report.abort_reason.value} ({culprits})")
    else:
        lines.append(f"tally     {report.tally} of {report.n_voters}")
    lines.extend(f"warning   {w}" for w in report.warnings)
    lines.append(f"chain     {report.chain_head}")
    lines.append(f"trace     {report.trace_head}")
    return "\n".join(lines)


def format_security_table(report: SecurityReport) -> str:
    width = max(len(v.property.value) for v in report.verdicts)
    rows = [f"{'property':<{width}}  {'status':<16}  evidence"]
    rows.extend(
        f"{v.property.value:<{width}}  {v.status:<16}  {v.evidence}"
        for v in report.verdicts
    )
    return "\n".join(rows)


def cmd_run(args: argparse.Namespace) -> int:
    config = load_scenario(args.config, args.seed)
    run = run_election(config)
    written = store_run(_repository(args.out), run)
    print(format_report(run.report))
    for location in written.values():
        logger.debug(f"Artifact {location}")
    return EXIT_FAILED if run.report.aborted else EXIT_OK


def cmd_attack(args: argparse.Namespace) -> int:
    if args.type not in SUITE_NAMES:
        raise CliError(
            ProblemDetail(
                title="Unknown attack suite",
                status=EXIT_INVALID,
                detail=f"{args.type!r} is not one of {', '.join(SUITE_NAMES)}",
            )
        )
    config = load_scenario(args.config)
    repository = _repository(args.out) if args.out else None

    def keep(label: str, run: ElectionRun) -> None:
        if repository is not None:
            store_run(repository, run, prefix=f"attacks/{label}")

    report = run_security_suite(config, args.type, on_run=keep)
    if repository is not None:
        store_model(repository, report, SECURITY_NAME)
    print(format_security_table(report))
    return EXIT_OK if report.all_passed else EXIT_FAILED


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        data = Path(args.path).read_bytes()
    except OSError as e:
        raise CliError(
            ProblemDetail(
                title="Unreadable trace",
                status=EXIT_INVALID,
                detail=str(e),
                instance=args.path,
            )
        ) from e
    result = verify_trace(data)
    if not result.ok:
        sys.stderr.write(f"line {result.first_bad_line}: {result.reason}\n")
        return EXIT_CORRUPTED
    for warning in result.warnings:
        logger.warning(warning)
    tally = "none" if result.tally is None else str(result.tally)
    print(f"ok: {result.lines} lines, tally {tally}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qvote",
        description="Simulate self-tallying masked-ballot elections.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run one election")
    run.add_argument("--config", required=True, help="Scenario JSON file")
    run.add_argument("--seed", type=int, help="Override the scenario seed")
    run.add_argument("--out", required=True, help="Output directory")
    run.set_defaults(handler=cmd_run)

    attack = sub.add_parser("attack", help="Run an attack suite")
    attack.add_argument("--config", required=True, help="Scenario JSON file")
    attack.add_argument(
        "--type", default="all", help=f"One of: {', '.join(SUITE_NAMES)}"
    )
    attack.add_argument("--out", help="Output directory for traces and table")
    attack.set_defaults(handler=cmd_attack)

    verify = sub.add_parser("verify", help="Verify a trace file")
    verify.add_argument("path", help="trace.jsonl to check")
    verify.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """
    Parse arguments and dispatch to a subcommand.

    Returns:
        int: Process exit code
    """
    configure_logger(get_settings())
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_INVALID

    try:
        return args.handler(args)
    except CliError as e:
        _emit_problem(e.problem)
        return e.problem.status
    except (QVoteError, ValueError) as e:
        _emit_problem(
            ProblemDetail(
                title="Simulation error",
                status=EXIT_INVALID,
                detail=str(e),
                instance=getattr(args, "config", None),
            )
        )
        return EXIT_INVALID
    except OSError as e:
        _emit_problem(
            ProblemDetail(
                title="Cannot write artifacts",
                status=EXIT_INVALID,
                detail=str(e),
                instance=getattr(args, "out", None),
            )
        )
        return EXIT_INVALID
