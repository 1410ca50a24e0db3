"""Command-line entry point: ``sparsedom <command> [options]``.

Exit codes: 0 success, 2 parameter error, 3 resolution / coverage / budget
error, 4 sparse-construction failure, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (AlignmentError, BudgetError, CoverageError, ResolutionError,
                     SparseConstructionError)
from .experiments import COMMANDS, ExperimentConfig, ExperimentResult

EXIT_OK, EXIT_FAIL, EXIT_PARAM, EXIT_RESOLUTION, EXIT_SPARSE = 0, 1, 2, 3, 4


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _q(text: str) -> float:
    return math.inf if text.lower() in ("inf", "infinity") else float(text)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 2 is argparse's default; keep the message format
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARAM, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sparsedom", description="Recorded-constant experiments on dyadic grids.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--p", type=float, default=1.5)
    parser.add_argument("--q", type=_q, default=2.0, help="l^q exponent ('inf' allowed)")
    parser.add_argument("--beta", type=float, default=1.0)
    parser.add_argument("--deltas", type=_float_list, default=(0.4, 0.2, 0.1, 0.05))
    parser.add_argument("--depth", type=int, default=None, help="grid depth m (2**m cells per axis)")
    parser.add_argument("--dim", type=int, default=1, choices=(1, 2))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--seeds", type=int, default=20, help="number of seeds (domination)")
    parser.add_argument("--functions", type=int, default=4, help="max functions per sequence")
    parser.add_argument("--omega", default="const1")
    parser.add_argument("--amplitude", default="xlogx")
    parser.add_argument("--weight", default="power", choices=("power", "unit"))
    parser.add_argument("--source", default="indicator", choices=("indicator", "power"))
    parser.add_argument("--drop-coarse", type=int, default=0, help="exclude this many coarsest deltas from slope fits")
    parser.add_argument("--no-refine", action="store_true", help="skip the depth+1 refinement run")
    parser.add_argument("--out", type=Path, default=None)
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--plotdata", type=Path, default=None,
                        help="directory for two-column .dat files")
    return parser


def _fmt(v) -> str:
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_default(v):
    if isinstance(v, np.generic):
        return v.item()
    return str(v)


def render(result: ExperimentResult, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"command": result.name, "columns": result.columns,
                           "rows": result.rows, "summary": result.summary},
                          indent=2, sort_keys=False, default=_json_default) + "\n"
    lines = [",".join(result.columns)]
    for r in result.rows:
        lines.append(",".join(_fmt(r[c]) for c in result.columns))
    return "\n".join(lines) + "\n"


def write_plotdata(result: ExperimentResult, directory: Path) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, (xs, ys) in result.plotdata.items():
        path = directory / f"{result.name}_{name}.dat"
        with open(path, "w") as fh:
            for x, y in zip(xs, ys):
                fh.write(f"{x!r} {y!r}\n")
        paths.append(path)
    return paths


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig(
            name=args.command, p=args.p, q=args.q, beta=args.beta, deltas=args.deltas,
            depth=args.depth, dim=args.dim, seed=args.seed, seeds=args.seeds,
            functions=args.functions, omega=args.omega, amplitude=args.amplitude,
            weight=args.weight, source=args.source, drop_coarse=args.drop_coarse,
            refine=not args.no_refine,
        )
        result = COMMANDS[args.command](cfg)
    except SparseConstructionError as exc:
        print(f"sparse construction failed: {exc}", file=sys.stderr)
        return EXIT_SPARSE
    except (ResolutionError, CoverageError, AlignmentError, BudgetError) as exc:
        print(f"resolution error: {exc}", file=sys.stderr)
        return EXIT_RESOLUTION
    except ValueError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAM

    text = render(result, args.format)
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)
    if args.plotdata is not None:
        write_plotdata(result, args.plotdata)
    for key, value in result.summary.items():
        print(f"{key}: {value}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
