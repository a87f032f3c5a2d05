# core/cli.py

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .errors import DomainError, FactorizationError, GridFormatError
from .grid import BenchmarkFunction, GridField, format_csv, load_csv, sample
from .oracle import ground_truth
from .pipeline import FindOptions, InputDescriptor, report_from_json, report_to_json, run_pipeline
from .plot_svg import render_svg

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

FUNCTION_CHOICES = [f.value for f in BenchmarkFunction]
KERNEL_CHOICES = ["gaussian", "iq", "wendland"]


def _write_output(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    Path(out).write_text(text, encoding="utf-8")


def cmd_sample(args: argparse.Namespace) -> int:
    g = sample(args.fn, args.nx, args.ny)
    _write_output(format_csv(g), args.out)
    return EXIT_OK


def _load_field(args: argparse.Namespace) -> tuple[GridField, InputDescriptor]:
    if args.input is not None:
        g = load_csv(args.input)
        return g, InputDescriptor.for_field(g, "csv", path=str(args.input))
    g = sample(args.fn, args.nx, args.ny)
    return g, InputDescriptor.for_field(g, "function", function=args.fn)


def cmd_find(args: argparse.Namespace) -> int:
    g, desc = _load_field(args)
    options = FindOptions(
        kernel=args.kernel,
        alpha=args.alpha,
        seeds=args.seeds,
        max_iter=args.max_iter,
        threads=args.threads,
        include_timings=args.timings,
    )
    report = run_pipeline(g, options, desc)
    _write_output(report_to_json(report), args.json)
    return EXIT_OK


def cmd_plot(args: argparse.Namespace) -> int:
    report = report_from_json(Path(args.report).read_text(encoding="utf-8"))
    if args.field is not None:
        g = load_csv(args.field)
    elif report.input.source == "function" and report.input.function is not None:
        g = sample(report.input.function, report.input.nx, report.input.ny)
    else:
        raise DomainError("--field is required when the report was not produced from a built-in function")

    if (g.nx, g.ny) != (report.input.nx, report.input.ny):
        raise DomainError(
            f"report grid {report.input.nx}x{report.input.ny} does not match field grid {g.nx}x{g.ny}"
        )

    truth = None
    if report.input.source == "function" and report.input.function is not None:
        truth = ground_truth(report.input.function)
    _write_output(render_svg(g, report, truth, levels=args.levels), args.out)
    return EXIT_OK


def cmd_truth(args: argparse.Namespace) -> int:
    payload = ground_truth(args.fn).to_dict(samples_per_curve=args.samples)
    _write_output(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stationary-points",
        description="Find stationary points of a gridded scalar field with piecewise RBF interpolation.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="DEBUG ログを出す")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="テスト関数をサンプリングしてグリッド CSV を書く")
    p.add_argument("--fn", required=True, choices=FUNCTION_CHOICES)
    p.add_argument("--nx", type=int, default=120)
    p.add_argument("--ny", type=int, default=120)
    p.add_argument("-o", "--out", default=None, help="出力 CSV (default: stdout)")
    p.set_defaults(handler=cmd_sample)

    p = sub.add_parser("find", help="停留点とそのつながりを求めて JSON レポートを書く")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--fn", choices=FUNCTION_CHOICES)
    src.add_argument("--in", dest="input", metavar="CSV")
    p.add_argument("--kernel", choices=KERNEL_CHOICES, default="gaussian")
    p.add_argument("--nx", type=int, default=120)
    p.add_argument("--ny", type=int, default=120)
    p.add_argument("--alpha", type=float, default=None, help="形状パラメータ (default: omega/(3d))")
    p.add_argument("--seeds", type=int, default=3, help="探索領域あたりのシード数 (軸方向)")
    p.add_argument("--max-iter", type=int, default=30)
    p.add_argument("--json", default=None, help="出力 JSON (default: stdout)")
    p.add_argument("--threads", type=int, default=None, help="スイープのスレッド数 (default: 全コア)")
    p.add_argument("--timings", action="store_true", help="timings_ms を出力に含める")
    p.set_defaults(handler=cmd_find)

    p = sub.add_parser("plot", help="等高線図と検出結果を SVG に描く")
    p.add_argument("--report", required=True)
    p.add_argument("--field", default=None, help="グリッド CSV (組み込み関数のレポートなら省略可)")
    p.add_argument("--levels", type=int, default=10)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(handler=cmd_plot)

    p = sub.add_parser("truth", help="テスト関数の解析的な停留点を JSON で書く")
    p.add_argument("--fn", required=True, choices=FUNCTION_CHOICES)
    p.add_argument("--samples", type=int, default=200, help="曲線 1 本あたりのサンプル数")
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(handler=cmd_truth)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        return args.handler(args)
    except FactorizationError as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, GridFormatError, ValueError) as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return EXIT_INPUT
