"""Command-line front end: point tables, 1D/2D rate studies and the triangular-mesh ladder."""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from . import fem2d_tri, harness1d, polyalg, tensor2d
from .problems import get_problem
from .solver1d import SolverError
from .spline1d import Partition1D

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SOLVER = 3

BOOL_KEYS = {"assume_mean_cancellation", "all", "predicted"}


class InvalidInput(ValueError):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_pair(text: str) -> tuple[float, float]:
    parts = [p for p in str(text).split(",") if p.strip()]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    return float(parts[0]), float(parts[1])


def _pair_list(text: str) -> list[tuple[float, float]]:
    return [_float_pair(p) for p in str(text).split(";") if p.strip()]


def read_config(path: str | Path) -> dict[str, str]:
    """Plain ``key = value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInput(f"{path}:{n}: expected 'key = value'")
        key, value = (t.strip() for t in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _as_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise InvalidInput(f"expected a boolean, got {value!r}")


def format_points(pset: polyalg.SuperconvergencePointSet) -> str:
    pts = pset.points
    if pset.a_value is not None:
        return f"±{pset.a_value:.8f}"
    return ", ".join("0" if p == 0 else f"{p:.0f}" for p in pts)


# ---------------------------------------------------------------- subcommands

def cmd_points(args) -> str:
    if args.all:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "s", "points"])
        for k in range(2, args.max_k + 1):
            for s in range(k + 1):
                pset = polyalg.superconv_points(k, s, assume_mean_cancellation=True)
                w.writerow([k, s, " ".join(f"{p:.8f}" for p in pset.points)])
        return buf.getvalue()
    pset = polyalg.superconv_points(args.k, args.s, args.assume_mean_cancellation)
    return format_points(pset) + "\n"


def cmd_table1(args) -> str:
    """Rows k = 2..max_k, columns s = 0..max_k; cells as in the published layout."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k"] + [str(s) for s in range(args.max_k + 1)])
    for k in range(2, args.max_k + 1):
        row = [str(k)]
        for s in range(args.max_k + 1):
            row.append(format_points(polyalg.superconv_points(k, s, True)) if s <= k else "")
        w.writerow(row)
    return buf.getvalue()


def cmd_rates1d(args) -> tuple[str, bool]:
    problem = get_problem(args.problem, 1)
    N_list = [args.N * 2**i for i in range(args.refinements + 1)]
    base = harness1d.m_grid_from_step(args.m_grid)
    records = []
    for s in args.s:
        grid = base
        if args.predicted:
            pts = polyalg.superconv_points(args.k, s, assume_mean_cancellation=True).points
            grid = sorted(set(base) | set(pts))
        records += harness1d.rate_sweep(problem, args.k, args.mu, s, N_list, grid, tuple(args.interior))
    records.sort(key=lambda r: (r.s, r.m, r.N_coarse))
    return harness1d.records_to_csv(records), any(r.flag == "failed" for r in records)


def cmd_tensor2d(args) -> str:
    problem = get_problem(args.problem, 2)
    records = tensor2d.tensor_rate_study(problem, args.k, args.mu, args.ladder, args.ref, tuple(args.alpha), tuple(args.interior))
    return tensor2d.tensor_records_to_csv(records)


def cmd_tri2d(args) -> tuple[str, list]:
    problem = get_problem(args.problem, 2)
    kind = fem2d_tri.ElementKind.parse(args.kind)
    meshes, sols = fem2d_tri.run_ladder(problem, kind, args.ladder, args.rings, args.rho, args.seed)
    records = fem2d_tri.probe_rates(problem, sols)
    return fem2d_tri.tri_records_to_csv(records), meshes


# ---------------------------------------------------------------- parsing

def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="superconv", description=__doc__)
    parser.add_argument("--config", help="file of 'key = value' lines; flags override it")
    parser.add_argument("--out", help="write output here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("points", help="superconvergence points for (k, s)")
    p.add_argument("--k", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--assume-mean-cancellation", action="store_true")
    p.add_argument("--all", action="store_true", help="every (k, s) with k <= max-k as CSV")
    p.add_argument("--max-k", type=int, default=11)
    subs["points"] = p

    p = sub.add_parser("table1", help="full point table for k <= max-k")
    p.add_argument("--max-k", type=int, default=11)
    subs["table1"] = p

    p = sub.add_parser("rates1d", help="1D pointwise rate sweep")
    p.add_argument("--k", type=int)
    p.add_argument("--mu", type=int)
    p.add_argument("--s", type=_int_list, default=None, help="derivative orders, comma separated")
    p.add_argument("--N", type=int, default=60)
    p.add_argument("--refinements", type=int, default=1)
    p.add_argument("--m-grid", type=float, default=0.05, help="spacing of the reference grid")
    p.add_argument("--problem", default="sin1d")
    p.add_argument("--interior", type=_float_pair, default=harness1d.DEFAULT_INTERIOR)
    p.add_argument("--no-predicted", dest="predicted", action="store_false",
                   help="do not add the predicted superconvergence points to the m grid")
    subs["rates1d"] = p

    p = sub.add_parser("tensor2d", help="tensor-product spline rate study")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--mu", type=int, default=None, help="smoothness, default k-1")
    p.add_argument("--ladder", type=_int_list, default=[16, 32, 64])
    p.add_argument("--alpha", type=_float_pair, default=(0, 0))
    p.add_argument("--ref", type=_pair_list, default=[(-1.0, -1.0)],
                   help="reference points in [-1,1]^2 separated by ';'")
    p.add_argument("--problem", default="sin2d")
    p.add_argument("--interior", type=_float_pair, default=harness1d.DEFAULT_INTERIOR)
    subs["tensor2d"] = p

    p = sub.add_parser("tri2d", help="triangular-mesh ladder with a symmetric patch")
    p.add_argument("--kind", choices=["p2", "hermite"], default="p2")
    p.add_argument("--ladder", type=_int_list, default=None, help="grid resolutions n")
    p.add_argument("--rho", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--rings", type=int, default=3)
    p.add_argument("--problem", default="sin2d")
    p.add_argument("--mesh-dir", help="directory for mesh files, one per level")
    subs["tri2d"] = p
    return parser, subs


DEFAULT_LADDERS = {"p2": [20, 40, 80, 160], "hermite": [30, 50, 80, 120]}


def parse_args(argv) -> argparse.Namespace:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = read_config(args.config)
        except OSError as exc:
            raise InvalidInput(str(exc)) from exc
        sp = subs[args.command]
        known = {a.dest for a in sp._actions} | {"out"}
        unknown = set(cfg) - known
        if unknown:
            raise InvalidInput(f"unknown config keys: {', '.join(sorted(unknown))}")
        if "out" in cfg:
            parser.set_defaults(out=cfg.pop("out"))
        for key in BOOL_KEYS & set(cfg):
            cfg[key] = _as_bool(cfg[key])
        sp.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def validate(args) -> None:
    """Check every parameter against module preconditions before any work."""
    cmd = args.command
    if cmd == "points":
        if args.all:
            if not 2 <= args.max_k <= polyalg.MAX_ITERATES:
                raise InvalidInput("max-k out of range")
            return
        if args.k is None or args.s is None:
            raise InvalidInput("points needs --k and --s (or --all)")
        polyalg.superconv_points(args.k, args.s, args.assume_mean_cancellation)
    elif cmd == "table1":
        if not 2 <= args.max_k <= polyalg.MAX_ITERATES:
            raise InvalidInput("max-k out of range")
    elif cmd == "rates1d":
        if args.k is None:
            raise InvalidInput("rates1d needs --k")
        if args.mu is None:
            args.mu = args.k - 1
        if args.s is None:
            args.s = list(range(args.k + 1))
        if args.k < 2 or not 0 <= args.mu <= args.k - 1:
            raise InvalidInput("need k >= 2 and 0 <= mu <= k-1")
        if not args.s or any(not 0 <= s <= args.k for s in args.s):
            raise InvalidInput("derivative orders must lie in [0, k]")
        if args.N < 1 or args.refinements < 1:
            raise InvalidInput("need N >= 1 and at least one refinement")
        if not 0 < args.m_grid <= 1:
            raise InvalidInput("m-grid spacing must lie in (0, 1]")
        lo, hi = args.interior
        if not 0 < lo < hi < 1:
            raise InvalidInput("interior must satisfy 0 < lo < hi < 1")
        if harness1d.interior_elements(Partition1D.uniform(args.N), args.interior).size == 0:
            raise InvalidInput("no element lies inside the interior region at the coarsest level")
        get_problem(args.problem, 1)
    elif cmd == "tensor2d":
        if args.mu is None:
            args.mu = args.k - 1
        if args.k < 1 or not 0 <= args.mu <= args.k - 1:
            raise InvalidInput("need k >= 1 and 0 <= mu <= k-1")
        if len(args.ladder) < 2 or any(n < 1 for n in args.ladder) or sorted(set(args.ladder)) != args.ladder:
            raise InvalidInput("ladder must be at least two increasing positive integers")
        a = tuple(int(v) for v in args.alpha)
        if a != tuple(args.alpha) or any(not 0 <= v <= args.k for v in a):
            raise InvalidInput("alpha components must be integers in [0, k]")
        args.alpha = a
        if not args.ref or any(not (-1 <= m <= 1) for pair in args.ref for m in pair):
            raise InvalidInput("reference points must lie in [-1, 1]^2")
        lo, hi = args.interior
        if not 0 < lo < hi < 1:
            raise InvalidInput("interior must satisfy 0 < lo < hi < 1")
        get_problem(args.problem, 2)
    elif cmd == "tri2d":
        if args.ladder is None:
            args.ladder = DEFAULT_LADDERS[args.kind]
        if len(args.ladder) < 2 or sorted(set(args.ladder)) != args.ladder:
            raise InvalidInput("ladder must be at least two increasing integers")
        if not 0 <= args.rho < 0.3:
            raise InvalidInput("rho must lie in [0, 0.3)")
        if args.rings < 2:
            raise InvalidInput("rings must be at least 2")
        # geometry checks are cheap; run them for every level up front
        for n in args.ladder:
            for a, b in ((fem2d_tri.DEFAULT_X0[0], fem2d_tri.DEFAULT_X0_PRIME[0]),
                         (fem2d_tri.DEFAULT_X0[1], fem2d_tri.DEFAULT_X0_PRIME[1])):
                fem2d_tri.grid_lines(n, a, b, args.rings)
        get_problem(args.problem, 2)
        if args.mesh_dir and Path(args.mesh_dir).exists() and not Path(args.mesh_dir).is_dir():
            raise InvalidInput("mesh-dir exists and is not a directory")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        validate(args)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    except (InvalidInput, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    try:
        if args.command == "points":
            _emit(cmd_points(args), args.out)
        elif args.command == "table1":
            _emit(cmd_table1(args), args.out)
        elif args.command == "rates1d":
            text, failed = cmd_rates1d(args)
            _emit(text, args.out)
            if failed:
                print("error: at least one solve failed", file=sys.stderr)
                return EXIT_SOLVER
        elif args.command == "tensor2d":
            _emit(cmd_tensor2d(args), args.out)
        elif args.command == "tri2d":
            text, meshes = cmd_tri2d(args)
            if args.mesh_dir:
                d = Path(args.mesh_dir)
                d.mkdir(parents=True, exist_ok=True)
                for n, mesh in zip(args.ladder, meshes):
                    mesh.save(d / f"{args.kind}_n{n}.mesh")
            _emit(text, args.out)
    except (SolverError, fem2d_tri.MeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
