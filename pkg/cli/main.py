# cli/main.py
"""
hetconv command line

    python -m cli analyze vgg16-cifar --p 4
    python -m cli transform vgg16-cifar --to hetconv --p 4 --output vgg16_p4.arch
    python -m cli speedup --k 3 --p-list 1,2,4,8,16,32,64 --svg speedup.svg
    python -m cli verify --trials 100 --seed 0

Exit codes: 0 success, 1 verification or training failure, 2 usage / validation error.
Tables go to stdout (or --output); logs go to stderr.
"""

import argparse
import logging
import sys
from typing import List, Optional

import logzero

from cli.commands import HANDLERS, TRANSFORMS
from config.settings import load_settings
from training.trainer import TrainingError
from utils.file_io import write_output
from utils.validation import ValidationError

logger = logging.getLogger("HetConvCLI")

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def _add_format(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=["csv", "json"], default=None,
                   help="output format (default: general.output_format)")
    p.add_argument("--output", "-o", default=None, help="write to FILE instead of stdout")


def _add_transform_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--p", default=None, help='part P, an integer or "pc" (P = M per layer)')
    p.add_argument("--groups", type=int, default=None, help="G for --to gwc_pwc")
    p.add_argument("--no-skip-first", action="store_true",
                   help="also transform the first conv layer")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hetconv",
                                     description="HetConv kernels, cost model and architecture tools")
    parser.add_argument("--log-level", choices=LOG_LEVELS, default=None,
                        help="stderr log level (default: general.log_level)")
    parser.add_argument("--config", default=None, help="JSON settings file layered over the defaults")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("analyze", help="per-layer FLOPs, parameters and latency")
    p.add_argument("arch", help="builtin name or architecture file")
    _add_transform_options(p)
    p.add_argument("--baseline", default=None, help="architecture to compute reductions against")
    p.add_argument("--p-list", default=None,
                   help="comma-separated parts; emits a model comparison table")
    _add_format(p)

    p = sub.add_parser("transform", help="rewrite an architecture, emit the architecture file")
    p.add_argument("arch")
    p.add_argument("--to", required=True, choices=TRANSFORMS)
    _add_transform_options(p)
    p.add_argument("--output", "-o", default=None)

    for name, text in (("speedup", "closed-form speedup curve over P"),
                       ("compare", "HetConv vs GWC+PWC vs DWC+PWC reductions")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--k", type=int, default=None, help="kernel size K")
        p.add_argument("--p-list", default=None, help="comma-separated P values")
        if name == "speedup":
            p.add_argument("--svg", default=None, help="also write an SVG line chart")
        _add_format(p)

    p = sub.add_parser("latency", help="sequential conv stages per block")
    p.add_argument("arch")
    p.add_argument("--to", default=None, choices=TRANSFORMS)
    _add_transform_options(p)
    _add_format(p)

    p = sub.add_parser("verify", help="randomized oracle, count, gradient and inequality checks")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--gradient-trials", type=int, default=None)
    p.add_argument("--seed", default=None)
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    _add_format(p)

    p = sub.add_parser("bench", help="wall-clock and MAC counts of one layer across variants")
    p.add_argument("--m", type=int, required=True, help="input channels")
    p.add_argument("--n", type=int, required=True, help="output channels")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--padding", type=int, default=None, help="default K // 2")
    p.add_argument("--input-size", type=int, default=None)
    p.add_argument("--batch", type=int, default=1)
    p.add_argument("--variants", default=None, help='e.g. "standard,hetconv:4,dwc_pwc,gwc_pwc:4"')
    p.add_argument("--repetitions", type=int, default=None)
    p.add_argument("--seed", default=None)
    p.add_argument("--no-timing", action="store_true", help="MAC columns only (deterministic)")
    _add_format(p)

    p = sub.add_parser("train-toy", help="train the toy net on the synthetic dataset")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--p", default=None, help="part for the HetConv twin (1 = standard)")
    mode.add_argument("--compare", default=None, help="comma-separated parts to compare with P=1")
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--lr-decay", type=float, default=None)
    p.add_argument("--decay-every", type=int, default=None)
    p.add_argument("--momentum", type=float, default=None)
    p.add_argument("--weight-decay", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--seed", default=None)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--n-train", type=int, default=None)
    p.add_argument("--n-val", type=int, default=None)
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--report", default=None, help="also write a JSON training report")
    _add_format(p)
    return parser


def _configure_logging(level_name: str) -> None:
    level = getattr(logging, level_name.upper(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(asctime)s %(name)s %(levelname)s: %(message)s")
    logging.getLogger().setLevel(level)
    logzero.loglevel(level)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        settings = load_settings(args.config)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    _configure_logging(args.log_level or settings.get("general.log_level", "WARNING"))

    if getattr(args, "padding", 0) is None:
        args.padding = args.k // 2

    try:
        text, code = HANDLERS[args.command](args, settings)
        write_output(text, args.output if hasattr(args, "output") else None)
        return code
    except (ValidationError, KeyError, FileNotFoundError) as e:
        message = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"error: {message}", file=sys.stderr)
        return 2
    except TrainingError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
