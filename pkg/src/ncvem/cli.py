"""Command line driver: ``ncvem --problem lshape --mode adaptive --out run/``."""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from .adapt import AdaptConfig, run_loop
from .bench import (BENCHMARKS, ConvergenceTable, helmholtz_problem, lshape_problem,
                    patch_problem, square_layer_problem, write_components_csv, write_csv)
from .mesh import MeshError, read_mesh, write_mesh
from .system import SingularSystemError

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2

PDES = {
    "patch": patch_problem,
    "square-layer": square_layer_problem,
    "lshape": lshape_problem,
    "helmholtz": helmholtz_problem,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _BadInput(message)


class _BadInput(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ncvem", description=__doc__)
    p.add_argument("--problem", required=True,
                   help="square-layer | lshape | helmholtz | file:<mesh>")
    p.add_argument("--pde", default="patch", choices=sorted(PDES),
                   help="PDE solved on a file mesh (default: patch)")
    p.add_argument("--mode", default="adaptive", choices=("uniform", "adaptive"))
    p.add_argument("--levels", type=int, default=25)
    p.add_argument("--max-dofs", type=int, default=200_000)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--norm", default="h1", choices=("h1", "l2"))
    p.add_argument("--quad-order", type=int, default=9)
    p.add_argument("--stab-scale", default="one", choices=("one", "sqrtA"))
    p.add_argument("--window", type=int, default=4, help="levels used for the rate fit")
    p.add_argument("--out", default="ncvem-out", help="output directory")
    p.add_argument("--save-mesh", action="store_true", help="write the final mesh")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _setup(args):
    if args.problem.startswith("file:"):
        mesh = read_mesh(args.problem[len("file:"):])
        problem = PDES[args.pde](stab_scale=args.stab_scale)
        return mesh, problem
    if args.problem not in BENCHMARKS:
        raise _BadInput(f"unknown problem {args.problem!r}; choose from "
                        f"{', '.join(BENCHMARKS)} or file:<mesh>")
    bench = BENCHMARKS[args.problem]
    return bench.make_mesh(), bench.make_problem(stab_scale=args.stab_scale)


def _rates_text(table: ConvergenceTable, window: int) -> str:
    lines = [f"rates vs ndof over the last {min(window, len(table.records))} levels"]
    for key, val in table.rates.items():
        lines.append(f"  {key:5s} {val: .4f}" if math.isfinite(val) else f"  {key:5s}   nan")
    return "\n".join(lines)


def run_cli(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        config = AdaptConfig(theta=args.theta, max_levels=args.levels, max_dofs=args.max_dofs,
                             mode=args.mode, norm=args.norm, quad_order=args.quad_order)
        if args.window < 2:
            raise _BadInput("--window must be at least 2")
        mesh, problem = _setup(args)
    except (_BadInput, MeshError, ValueError, OSError) as exc:
        print(f"ncvem: error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")

    def show(rec):
        print(f"level {rec.level:2d}  ndof {rec.ndof:7d}  H1mu {rec.H1mu:.4e}  "
              f"H1e {rec.H1e:.4e}  L2e {rec.L2e:.4e}  marked {rec.n_marked}")

    try:
        records = run_loop(mesh, problem, config, on_level=show)
    except (SingularSystemError, RuntimeError, ArithmeticError) as exc:
        print(f"ncvem: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"ncvem: error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(records, out / "levels.csv")
    write_components_csv(records, out / "components_h1.csv", "h1")
    write_components_csv(records, out / "components_l2.csv", "l2")
    table = ConvergenceTable.from_records(records, args.window)
    text = _rates_text(table, args.window)
    (out / "rates.json").write_text(json.dumps(
        {k: (v if math.isfinite(v) else None) for k, v in table.rates.items()}, indent=2) + "\n")
    if args.save_mesh:
        write_mesh(records[-1].mesh, out / "final.mesh")
    print(text)
    return EXIT_OK


def main():
    sys.exit(run_cli())
