"""The ``splatlab`` command line.

::

    splatlab gen      --spec FILE --out DIR
    splatlab train    --data DIR [--config FILE] --out DIR
    splatlab render   --ckpt FILE --data DIR --view N (--ref M | --ref-image FILE) --out FILE
    splatlab transfer --ckpt FILE --data DIR --view N --ref-a A --ref-b B --alpha X [--alpha Y ...] --out FILE
    splatlab eval     --ckpt FILE --data DIR [--split test] --report FILE

Exit status is 0 on success, 1 on a usage error and 2 when the work
itself fails.

"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from .config import setup_logging


__all__ = [
    "main",
    "build_parser",
    "UsageError",
]

logger = logging.getLogger(__name__)

USAGE_ERROR = 1
RUNTIME_FAULT = 2

_THREAD_VARIABLES = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


class UsageError(Exception):
    """Raised by the parser instead of exiting."""

    def __init__(self, parser: argparse.ArgumentParser, message: str) -> None:
        self.parser = parser
        super().__init__(message)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(self, message)


def _probability(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1]; got {text}")
    return value


def _index(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative; got {text}")
    return value


def _index_list(text: str) -> tuple[int, ...]:
    return tuple(_index(part) for part in text.split(",") if part.strip())


def _add_split_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("split")
    group.add_argument("--test-fraction", type=float, default=0.125,
                       help="share of views held out for testing (default: 0.125)")
    group.add_argument("--split-seed", type=int, default=0, help="seed of the train/test split")
    group.add_argument("--test-views", type=_index_list, default=None,
                       help="comma-separated test view indices; overrides the fraction")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="splatlab", description="Gaussian splatting for photo collections in the wild.")
    parser.add_argument("--verbose", action="store_true", help="log at DEBUG level")
    parser.add_argument("--threads", type=int, default=None,
                        help="pin the number of BLAS/OpenMP threads")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = commands.add_parser("gen", help="generate a synthetic dataset")
    gen.add_argument("--spec", type=Path, default=None, help="scene JSON (default: the built-in scene)")
    gen.add_argument("--out", type=Path, required=True)

    train = commands.add_parser("train", help="train a model on a dataset")
    train.add_argument("--data", type=Path, required=True)
    train.add_argument("--config", type=Path, default=None, help="key=value training configuration")
    train.add_argument("--variant", default=None, help="ablation preset applied on top of the configuration")
    train.add_argument("--seed", type=int, default=None, help="override the configured seed")
    train.add_argument("--out", type=Path, required=True)
    train.add_argument("--plot", action="store_true", help="write curves.png")
    train.add_argument("--dump-masks", action="store_true", help="write the predicted training masks")
    _add_split_arguments(train)

    render = commands.add_parser("render", help="render a view with the appearance of a reference")
    render.add_argument("--ckpt", type=Path, required=True)
    render.add_argument("--data", type=Path, required=True)
    render.add_argument("--view", type=_index, required=True)
    reference = render.add_mutually_exclusive_group(required=True)
    reference.add_argument("--ref", type=_index, help="index of the reference view")
    reference.add_argument("--ref-image", type=Path, help="reference image outside the dataset")
    render.add_argument("--out", type=Path, required=True)

    transfer = commands.add_parser("transfer", help="render a view with a blend of two appearances")
    transfer.add_argument("--ckpt", type=Path, required=True)
    transfer.add_argument("--data", type=Path, required=True)
    transfer.add_argument("--view", type=_index, required=True)
    transfer.add_argument("--ref-a", type=_index, required=True)
    transfer.add_argument("--ref-b", type=_index, required=True)
    transfer.add_argument("--alpha", type=_probability, action="append", required=True,
                          help="blend weight of --ref-b; repeat to sweep")
    transfer.add_argument("--out", type=Path, required=True)

    evaluate = commands.add_parser("eval", help="report PSNR and SSIM on a split")
    evaluate.add_argument("--ckpt", type=Path, required=True)
    evaluate.add_argument("--data", type=Path, required=True)
    evaluate.add_argument("--split", choices=("train", "test", "all"), default="test")
    evaluate.add_argument("--report", type=Path, required=True)
    evaluate.add_argument("--plot", type=Path, default=None, help="write a histogram of mask scores")
    _add_split_arguments(evaluate)

    for subparser in (gen, train, render, transfer, evaluate):
        subparser.set_defaults(subparser=subparser)
    return parser


def _check_inputs(args: argparse.Namespace) -> None:
    """Rejects missing inputs before any work starts."""
    files = [getattr(args, name, None) for name in ("spec", "config", "ckpt", "ref_image")]
    for path in files:
        if path is not None and not path.is_file():
            raise UsageError(args.subparser, f"file not found: {path}")
    data = getattr(args, "data", None)
    if data is not None and not data.is_dir():
        raise UsageError(args.subparser, f"dataset directory not found: {data}")
    if args.threads is not None and args.threads < 1:
        raise UsageError(args.subparser, f"--threads must be positive; got {args.threads}")
    fraction = getattr(args, "test_fraction", None)
    if fraction is not None and not 0.0 <= fraction < 1.0:
        raise UsageError(args.subparser, f"--test-fraction must be in [0, 1); got {fraction}")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _check_inputs(args)
    except UsageError as e:
        e.parser.print_usage(sys.stderr)
        print(f"{e.parser.prog}: error: {e}", file=sys.stderr)
        return USAGE_ERROR

    log_file = args.out / "train.log" if args.command == "train" else None
    setup_logging(logging.DEBUG if args.verbose else logging.INFO, log_file=log_file)
    if args.threads is not None:
        for name in _THREAD_VARIABLES:
            os.environ[name] = str(args.threads)

    # numeric modules load after the thread count is pinned
    from . import commands
    from .core.errors import CheckpointError, ContractViolation, DatasetError, NumericFault

    try:
        return commands.COMMANDS[args.command](args)
    except (ContractViolation, NumericFault, DatasetError, CheckpointError, ValueError, OSError) as e:
        logger.error("%s failed: %s", args.command, e)
        return RUNTIME_FAULT
