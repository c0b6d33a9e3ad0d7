"""Command-line entry point.

Exit codes: 0 when the claim holds, 1 when a counterexample or failed check
was found, 2 for bad input or configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

from dotenv import load_dotenv
from pydantic import ValidationError

from . import __version__
from .commands import dispatch
from .config import current_settings, get_settings, use_settings
from .exceptions import ConfigurationError, InvalidInputError, LsiForgeError, WeightNotFoundError
from .models import CommandName, OutputFormat, RunConfig, RunReport
from .utils.logger import clear_run_id, get_logger, kv, set_level, set_run_id

log = get_logger(__name__)

USAGE_ERRORS = (ConfigurationError, InvalidInputError, WeightNotFoundError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lsi-forge",
        description="Numerical verification of log-Sobolev and hypercontractive inequalities on Z_n",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int, help="worker pool size (default: LSI_FORGE_THREADS)")
        p.add_argument("--tol", type=float, help="slack and KKT residual tolerance")
        p.add_argument("--out", help="report path (stdout when omitted)")
        p.add_argument("--format", choices=[f.value for f in OutputFormat], default=OutputFormat.JSON.value)
        p.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"])

    p = sub.add_parser(CommandName.VERIFY_LSI.value, help="sample and minimize f on the positive sphere")
    p.add_argument("--weight", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--samples", type=float)
    p.add_argument("--starts", type=float)
    common(p)

    p = sub.add_parser(CommandName.KKT_SEARCH.value, help="search the absorbed stationary system")
    p.add_argument("--weight", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--starts", type=float)
    common(p)

    p = sub.add_parser(CommandName.CASCADE.value, help="verify the auxiliary chains h, h1..h8")
    p.add_argument("--case", choices=["Z6", "Z4", "both"], default="both")
    p.add_argument("--x-max", type=float, dest="x_max")
    p.add_argument("--samples", type=float)
    common(p)

    p = sub.add_parser(CommandName.PAIR_CHECK.value, help="pair condition and quadratic inequality")
    p.add_argument("--pair")
    p.add_argument("--n", type=int)
    p.add_argument("--resolution", type=int)
    p.add_argument("--tower", action="store_true", help="check every dyadic tower pair up to --n (default 128)")
    common(p)

    p = sub.add_parser(CommandName.INDUCTION.value, help="Monte-Carlo check of the n -> 2n step")
    p.add_argument("--pair", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--samples", type=float)
    common(p)

    p = sub.add_parser(CommandName.HYPER_TIME.value, help="optimal hypercontractive time by bisection")
    p.add_argument("--n", type=int)
    p.add_argument("--weight")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--q", type=float, default=4.0)
    p.add_argument("--starts", type=float)
    p.add_argument("--signed", action="store_true", help="maximize over signed f")
    common(p)

    p = sub.add_parser(CommandName.ENTROPY_SPLIT.value, help="entropy of an interleaved vector")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=float)
    common(p)

    return parser


def parse_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    log_level = args.pop("log_level", None)
    if log_level:
        set_level(log_level)
    return RunConfig.model_validate({k: v for k, v in args.items() if v is not None})


# ==============================================================================
# Output
# ==============================================================================


def _flatten(prefix: str, value: Any, into: Dict[str, Any]) -> None:
    if isinstance(value, dict):
        for key, inner in value.items():
            _flatten(f"{prefix}.{key}" if prefix else str(key), inner, into)
    elif isinstance(value, list) and value and isinstance(value[0], (dict, list)):
        into[prefix] = json.dumps(value)
    else:
        into[prefix] = value


def csv_rows(report: RunReport) -> List[Dict[str, Any]]:
    """The report's table, or one flattened row per detail record when it has none."""
    if report.table:
        return report.table
    rows = []
    for detail in report.details:
        row: Dict[str, Any] = {}
        _flatten("", detail, row)
        rows.append(row)
    return rows


def render_csv(rows: Iterable[Dict[str, Any]]) -> str:
    rows = list(rows)
    fields: List[str] = []
    for row in rows:
        fields.extend(k for k in row if k not in fields)
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def render(report: RunReport, fmt: OutputFormat) -> str:
    if fmt is OutputFormat.CSV:
        return render_csv(csv_rows(report))
    return report.model_dump_json(indent=2)


def write_report(report: RunReport, config: RunConfig) -> None:
    text = render(report, config.format)
    if config.out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    path = Path(config.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    print(f"{report.command.value}: verdict={'PASS' if report.verdict else 'FAIL'} -> {path}")


# ==============================================================================
# Entry
# ==============================================================================


def run(config: RunConfig) -> int:
    """Run one command with its overrides applied; returns the process exit code."""
    overridden = current_settings().with_overrides(threads=config.threads, seed=config.seed, tol=config.tol)
    run_id = set_run_id()
    log.info("cli.run %s", kv(command=config.command.value, run_id=run_id, threads=overridden.threads))
    try:
        with use_settings(overridden):
            report = dispatch(config)
        write_report(report, config)
        log.info("cli.done %s", kv(command=config.command.value, verdict=report.verdict))
        return report.exit_code
    finally:
        clear_run_id()


def _usage_error(payload: Dict[str, Any]) -> int:
    print(json.dumps(payload, indent=2, default=str), file=sys.stderr)
    return 2


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    try:
        # .env is in the environment now; --log-level in parse_config still wins
        get_settings.cache_clear()
        set_level(get_settings().log_level)
        config = parse_config(argv)
        return run(config)
    except USAGE_ERRORS as exc:
        return _usage_error(exc.to_dict())
    except ValidationError as exc:
        return _usage_error(
            {"error": str(exc), "error_code": "VALIDATION_ERROR", "details": {"errors": exc.errors(include_url=False)}}
        )
    except LsiForgeError as exc:
        log.error("cli.failed %s", kv(error_code=exc.error_code, message=exc.message))
        print(json.dumps(exc.to_dict(), indent=2), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
