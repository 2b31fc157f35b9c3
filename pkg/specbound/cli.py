"""Command line front end: ``python -m specbound <command> ...``.

Exit codes: 0 success, 1 failing demo check, 2 input error, 3 bracket
violation, 4 budget truncation under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import pandas as pd
from pydantic import BaseModel

from .bounds import (
    BoundReport,
    BoundSequence,
    assemble_report,
    collatz_wielandt_bound,
    matrix_bound_d3,
    report_rows,
    rho1_bounds,
    rho2_bounds,
)
from .common import BoundConfig, BracketViolationError, InvalidArgumentError, make_report_filename, setup_logging
from .demo import run_demo
from .poly import HomoPoly, PolyMap, gradient_map, map_from_json, poly_from_json, poly_to_json
from .tensor import DenseTensor, hs_norm_tensor, poly_to_tensor, tensor_from_json, tensor_to_json, tensor_to_poly

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DEMO_FAILED = 1
EXIT_INPUT = 2
EXIT_VIOLATION = 3
EXIT_TRUNCATED = 4

CSV_FIELDS = ["method", "k", "value", "terminated_by"]


class SingleBound(BaseModel):
    method: str
    value: float
    hs_trivial: float


def load_input(path: str | Path) -> HomoPoly | DenseTensor | PolyMap:
    """Read a polynomial, polynomial map or tensor document from ``path``."""
    text = Path(path).read_text(encoding="utf-8")
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise InvalidArgumentError(f"{path}: expected a JSON object")
    if "coords" in doc:
        return map_from_json(text)
    if "terms" in doc:
        return poly_from_json(text)
    if "dims" in doc:
        return tensor_from_json(text)
    raise InvalidArgumentError(f"{path}: not a polynomial, map or tensor document")


def _as_poly(obj: HomoPoly | DenseTensor | PolyMap) -> HomoPoly:
    if isinstance(obj, HomoPoly):
        return obj
    if isinstance(obj, DenseTensor):
        return tensor_to_poly(obj)
    raise InvalidArgumentError("Expected a polynomial or a symmetric tensor")


def _as_tensor(obj: HomoPoly | DenseTensor | PolyMap) -> DenseTensor:
    if isinstance(obj, DenseTensor):
        return obj
    if isinstance(obj, HomoPoly):
        return poly_to_tensor(obj)
    raise InvalidArgumentError("Expected a tensor or a polynomial")


def _as_map(obj: HomoPoly | DenseTensor | PolyMap) -> PolyMap:
    if isinstance(obj, PolyMap):
        return obj
    return gradient_map(_as_poly(obj))


def _render(fmt: str, json_text: str, rows: list[dict[str, Any]], fields: Sequence[str]) -> str:
    if fmt == "json":
        return json_text + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()
    return pd.DataFrame(rows, columns=list(fields)).to_string(index=False) + "\n"


def _sequence_rows(seq: BoundSequence) -> list[dict[str, Any]]:
    return [
        {"method": seq.method, "k": k, "value": v, "terminated_by": seq.terminated_by}
        for k, v in zip(seq.ks, seq.values)
    ]


def _emit(text: str, args: argparse.Namespace) -> None:
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        logger.info("wrote %s", args.output)
    else:
        sys.stdout.write(text)
    if getattr(args, "save", False):
        ext = {"json": "json", "csv": "csv", "table": "txt"}[args.format]
        target = make_report_filename(args.command, ext)
        Path(target).write_text(text, encoding="utf-8")
        logger.info("saved %s", target)


def _config(args: argparse.Namespace) -> BoundConfig:
    return BoundConfig.from_env(
        rho1_kmax=args.kmax,
        rho2_kmax=args.kmax,
        budget=args.budget,
        seed=args.seed,
        starts=args.starts,
        tol=args.tol,
        strict=args.strict,
        include_timings=args.timings,
    )


def _cmd_bound(args: argparse.Namespace) -> int:
    config = _config(args)
    source = load_input(args.file)
    if isinstance(source, PolyMap):
        raise InvalidArgumentError("bound expects a polynomial or a tensor, not a map")
    try:
        report = assemble_report(source, config, source_name=Path(args.file).name)
    except BracketViolationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc.report, BoundReport):
            _emit(exc.report.to_json() + "\n", args)
        return EXIT_VIOLATION
    _emit(_render(args.format, report.to_json(), report_rows(report), CSV_FIELDS), args)
    if config.strict and report.truncated:
        print("error: a bound sequence was truncated by the monomial budget", file=sys.stderr)
        return EXIT_TRUNCATED
    return EXIT_OK


def _emit_sequence(seq: BoundSequence, args: argparse.Namespace, config: BoundConfig) -> int:
    _emit(_render(args.format, seq.model_dump_json(indent=2), _sequence_rows(seq), CSV_FIELDS), args)
    if config.strict and seq.terminated_by == "budget":
        print("error: sequence truncated by the monomial budget", file=sys.stderr)
        return EXIT_TRUNCATED
    return EXIT_OK


def _cmd_rho1(args: argparse.Namespace) -> int:
    config = _config(args)
    f = _as_poly(load_input(args.file))
    return _emit_sequence(rho1_bounds(f, config.rho1_kmax, config.budget, config.sequence_tol), args, config)


def _cmd_rho2(args: argparse.Namespace) -> int:
    config = _config(args)
    F = _as_map(load_input(args.file))
    return _emit_sequence(rho2_bounds(F, config.rho2_kmax, config.budget, config.sequence_tol), args, config)


def _cmd_cw(args: argparse.Namespace) -> int:
    config = _config(args)
    result = collatz_wielandt_bound(_as_tensor(load_input(args.file)), iters=config.cw_iters, tol=config.tol)
    rows = [{"method": "collatz_wielandt", "k": result.iterations, "value": result.bound,
             "terminated_by": "converged" if result.converged else "kmax"}]
    _emit(_render(args.format, result.model_dump_json(indent=2), rows, CSV_FIELDS), args)
    return EXIT_OK


def _cmd_matrix3(args: argparse.Namespace) -> int:
    config = _config(args)
    T = _as_tensor(load_input(args.file))
    result = SingleBound(method="matrix_d3", value=matrix_bound_d3(T, config.seed), hs_trivial=hs_norm_tensor(T))
    rows = [{"method": result.method, "k": "", "value": result.value, "terminated_by": ""}]
    _emit(_render(args.format, result.model_dump_json(indent=2), rows, CSV_FIELDS), args)
    return EXIT_OK


def _cmd_demo(args: argparse.Namespace) -> int:
    checks = run_demo()
    rows = [c.model_dump() for c in checks]
    fields = ["name", "expected", "actual", "tolerance", "passed"]
    text = json.dumps(rows, indent=2)
    _emit(_render(args.format, text, rows, fields), args)
    failed = [c for c in checks if not c.passed]
    if failed:
        print(f"error: {len(failed)} of {len(checks)} demo checks failed", file=sys.stderr)
        return EXIT_DEMO_FAILED
    return EXIT_OK


def _cmd_convert(args: argparse.Namespace) -> int:
    obj = load_input(args.file)
    if args.to == "tensor":
        text = tensor_to_json(_as_tensor(obj), indent=2)
    else:
        text = poly_to_json(_as_poly(obj), indent=2)
    _emit(text + "\n", args)
    return EXIT_OK


COMMANDS = {
    "bound": _cmd_bound,
    "rho1": _cmd_rho1,
    "rho2": _cmd_rho2,
    "cw": _cmd_cw,
    "matrix3": _cmd_matrix3,
    "demo": _cmd_demo,
    "convert": _cmd_convert,
}


def build_parser() -> argparse.ArgumentParser:
    options = argparse.ArgumentParser(add_help=False)
    options.add_argument("--kmax", type=int, help="Largest k for rho1 (doubling) and rho2")
    options.add_argument("--budget", type=int, help="Monomial budget per polynomial")
    options.add_argument("--seed", type=int, help="64-bit seed for random starts")
    options.add_argument("--starts", type=int, help="Number of random starts for the oracles")
    options.add_argument("--tol", type=float, help="Convergence tolerance for the oracles and Collatz-Wielandt")
    options.add_argument("--strict", action="store_true", help="Fail with exit 4 when a sequence is truncated")
    options.add_argument("--timings", action="store_true", help="Include per-method wall times")
    options.add_argument("--format", choices=["json", "csv", "table"], default="json")
    options.add_argument("-o", "--output", help="Write output to this file instead of stdout")
    options.add_argument("--save", action="store_true", help="Also save output under SPECBOUND_OUTPUT_DIR")

    parser = argparse.ArgumentParser(
        prog="specbound",
        description="Certified upper bounds on spectral norms of symmetric tensors",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("bound", parents=[options], help="Run the full bound battery").add_argument("file")
    sub.add_parser("rho1", parents=[options], help="Polynomial power bounds").add_argument("file")
    sub.add_parser("rho2", parents=[options], help="Gradient map iteration bounds").add_argument("file")
    sub.add_parser("cw", parents=[options], help="Collatz-Wielandt bound").add_argument("file")
    sub.add_parser("matrix3", parents=[options], help="Matrix bound for 3-mode tensors").add_argument("file")
    sub.add_parser("demo", parents=[options], help="Check closed-form cases")
    convert = sub.add_parser("convert", parents=[options], help="Convert between polynomial and tensor JSON")
    convert.add_argument("file")
    convert.add_argument("--to", choices=["poly", "tensor"], required=True)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv`` and run one command; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        setup_logging()
        return COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        # InvalidArgumentError, pydantic ValidationError and JSONDecodeError are ValueErrors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    raise SystemExit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
