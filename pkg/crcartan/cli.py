"""
Command-line front end.

    crcartan analyze <spec> --point <csv> [--order K] [--format table|json]
    crcartan check <suite> [--seed N] [--points N]
    crcartan fefferman <spec> --point <csv> [--order K] [--format table|json]

Exit codes: 0 pass, 1 parse error, 2 domain/order error, 3 check failure.
"""
import argparse
import json
import logging
import sys
from typing import List, Optional

import numpy as np

from crcartan.core.config import settings
from crcartan.core.errors import CheckFailure, CRCartanError
from crcartan.services.analysis import CRAnalyzer, parse_point, resolve_spec, shipped_specs
from crcartan.services.checks import SUITES, run_suite
from crcartan.services.report import render_table


def _emit(payload: dict, fmt: str, table: str) -> None:
    if fmt == "json":
        sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(table + "\n")


def _format_mapping(title: str, mapping: dict) -> List[str]:
    lines = [title]
    for key, value in mapping.items():
        if isinstance(value, float):
            lines.append(f"  {key:<24} {value: .10g}")
        elif isinstance(value, dict):
            lines.append(f"  {key:<24} " + ", ".join(f"{k}={v:.3e}" for k, v in value.items()))
        else:
            lines.append(f"  {key:<24} {value}")
    return lines


def cmd_analyze(args: argparse.Namespace) -> int:
    spec = resolve_spec(args.spec)
    point = parse_point(args.point)
    report = CRAnalyzer(seed=args.seed).analyze(spec, point, args.order)
    payload = report.to_dict()
    lines = [f"{report.spec} at ({', '.join(f'{x:g}' for x in report.point)}), order {report.order}"]
    lines += _format_mapping("invariants", report.scalars)
    lines += _format_mapping("Cartan curvature norms", report.curvature_norms)
    lines += _format_mapping("sphericity", {
        "verdict": report.sphericity["verdict"],
        "deciding tensor": report.sphericity["deciding_tensor"],
    })
    lines += _format_mapping("maximally constant Ricci residuals", report.maximally_constant)
    lines.append(f"Fefferman scalar curvature   {report.fefferman_scalar: .10g}")
    lines.append("")
    lines.append(render_table(report.residuals.frame()))
    _emit(payload, args.format, "\n".join(lines))
    return 0


def cmd_fefferman(args: argparse.Namespace) -> int:
    spec = resolve_spec(args.spec)
    point = parse_point(args.point)
    report = CRAnalyzer(seed=args.seed).fefferman(spec, point, args.order)
    with np.printoptions(precision=6, suppress=True, linewidth=120):
        lines = [
            f"{report.spec} at ({', '.join(f'{x:g}' for x in report.point)}), order {report.order}",
            f"signature {report.metric.signature()}",
            "g_F (coordinates, v last):",
            str(np.real(report.metric.value)),
            "Ric_F on the coframe (iϖ, θ, θ^α, θ^ᾱ), direct:",
            str(np.real(report.direct.coframe)),
            "Ric_F on the coframe, formula:",
            str(np.real(report.formula.coframe)),
            f"scalar: direct {report.direct.scalar:.10g}, formula {report.formula.scalar:.10g}, "
            f"expected {report.expected_scalar:.10g}",
            "",
            render_table(report.residuals.frame()),
        ]
    _emit(report.to_dict(), args.format, "\n".join(lines))
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    ledger = run_suite(args.suite, seed=args.seed, points=args.points)
    frame = ledger.frame()
    if args.format == "json":
        _emit({"suite": args.suite, "checks": ledger.to_records(), "passed": ledger.all_passed}, "json", "")
    else:
        _emit({}, "table", render_table(frame))
    failed = ledger.failed()
    if failed:
        raise CheckFailure(failed)
    return 0


def cmd_specs(args: argparse.Namespace) -> int:
    for name, path in shipped_specs().items():
        sys.stdout.write(f"{name}\t{path}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crcartan", description="CR geometry: Cartan connection, tractors, Fefferman metric")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr (-vv for debug)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_point_command(name: str, handler, help_text: str) -> None:
        command = sub.add_parser(name, help=help_text)
        command.add_argument("spec", help="shipped example name, spec file, or spec text")
        command.add_argument("--point", required=True, help="comma-separated chart coordinates")
        command.add_argument("--order", type=int, default=settings.DEFAULT_ORDER, help="jet order K")
        command.add_argument("--format", choices=("table", "json"), default="table")
        command.add_argument("--seed", type=int, default=settings.DEFAULT_SEED, help="seed for probe tractors")
        command.set_defaults(handler=handler)

    add_point_command("analyze", cmd_analyze, "full analysis at a point")
    add_point_command("fefferman", cmd_fefferman, "Fefferman metric and its Ricci curvature at a point")

    check = sub.add_parser("check", help="run an identity suite")
    check.add_argument("suite", choices=sorted(SUITES) + ["all"])
    check.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    check.add_argument("--points", type=int, default=settings.DEFAULT_POINTS)
    check.add_argument("--format", choices=("table", "json"), default="table")
    check.set_defaults(handler=cmd_check)

    specs = sub.add_parser("specs", help="list the shipped example manifolds")
    specs.set_defaults(handler=cmd_specs)
    return parser


def _configure_logging(verbose: int) -> None:
    level = settings.LOG_LEVEL
    if verbose == 1:
        level = "INFO"
    elif verbose >= 2:
        level = "DEBUG"
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return args.handler(args)
    except CRCartanError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
