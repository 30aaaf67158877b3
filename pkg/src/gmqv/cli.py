"""Command-line interface.

Exit codes: 0 success, 1 validation or verification failure, 2 usage or
parse errors.  Reports print 12 significant digits; CSV outputs are
byte-stable for fixed inputs and seed on one platform.

Path CSV schema: path,time,side,centred_value,value (side is L for a
left-limit ghost entry, V for a regular value).  Convergence CSV schema:
level,mesh,mc_mean,mc_var,mc_se,expected_realized,law_mean,law_var,n_paths.
"""

import argparse
import sys

from . import process_model as pm
from . import quadvar, realized, simulate
from .process_model import SpecError
from .specfile import (
    SpecFileError,
    SpecValidationError,
    load_spec,
    parse_spec_file,
    resolve_spec_path,
)

USAGE_ERROR = 2
FAILURE = 1


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _parse_cells(text: str) -> int:
    if "^" in text:
        base, _, exponent = text.partition("^")
        return int(base) ** int(exponent)
    return int(text)


def _parse_levels(text: str):
    if ".." in text:
        lo, _, hi = text.partition("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(text)]


def _load(args):
    return load_spec(resolve_spec_path(args.spec))


def cmd_validate(args) -> int:
    spec = parse_spec_file(resolve_spec_path(args.spec))
    report = pm.validate(spec, args.grid_points)
    print(report)
    return 0 if report.ok else FAILURE


def cmd_kernel(args) -> int:
    spec = _load(args)
    s = pm.left(args.s) if args.left_s else pm.at(args.s)
    t = pm.left(args.t) if args.left_t else pm.at(args.t)
    print(_fmt(pm.eval_kernel(spec, s, t)))
    return 0


def cmd_quadvar(args) -> int:
    spec = _load(args)
    law = quadvar.build_law(spec, args.t, include_mean=args.with_mean, tol=args.tol)
    print(f"t                  {_fmt(law.t)}")
    print(f"deterministic_part {_fmt(law.deterministic_part)}")
    print(f"jumps              {len(law.jumps)}")
    for j in law.jumps:
        print(
            f"  time {_fmt(j.time)}  gauss_var {_fmt(j.gauss_var)}"
            f"  mean_jump {_fmt(j.mean_jump)}"
        )
    if law.jumps:
        print("jump_cov")
        for row in law.jump_cov:
            print("  " + "  ".join(_fmt(v) for v in row))
    print(f"law_mean           {_fmt(quadvar.law_mean(law))}")
    print(f"law_variance       {_fmt(quadvar.law_variance(law))}")
    return 0


def cmd_simulate(args) -> int:
    spec = _load(args)
    grid = simulate.make_grid(spec, args.t, _parse_cells(args.cells))
    paths = simulate.sample_paths(spec, grid, args.seed, args.paths)
    with open(args.out, "w", newline="") as fh:
        fh.write("path,time,side,centred_value,value\n")
        for k, path in enumerate(paths):
            for j in range(len(grid)):
                side = "L" if grid.is_ghost[j] else "V"
                fh.write(
                    f"{k},{_fmt(grid.times[j])},{side},"
                    f"{_fmt(path.centred_values[j])},{_fmt(path.values[j])}\n"
                )
    print(f"wrote {len(paths)} paths x {len(grid)} grid entries to {args.out}")
    return 0


def cmd_realized(args) -> int:
    spec = _load(args)
    rows = realized.convergence_study(
        spec,
        args.t,
        _parse_levels(args.levels),
        args.paths,
        args.seed,
        with_mean=args.with_mean,
    )
    with open(args.out, "w", newline="") as fh:
        realized.write_convergence_csv(rows, fh)
    print(f"wrote {len(rows)} levels to {args.out}")
    return 0


def cmd_verify(args) -> int:
    spec = _load(args)
    result = realized.verify_level(
        spec, args.t, args.level, args.paths, args.seed, with_mean=args.with_mean
    )
    r = result.row
    print(
        f"level {r.level}  mesh {_fmt(r.mesh)}  n_paths {r.n_paths}\n"
        f"mc_mean {_fmt(r.mc_mean)}  law_mean {_fmt(r.law_mean)}  mc_se {_fmt(r.mc_se)}\n"
        f"mc_var  {_fmt(r.mc_var)}  law_var  {_fmt(r.law_var)}  var_se {_fmt(result.var_se)}"
    )
    print(f"mean within 4 se: {'yes' if result.mean_ok else 'NO'}")
    if r.law_var == 0.0:
        print("variance check skipped (law has no jump variance)")
    else:
        print(f"variance within 4 se: {'yes' if result.var_ok else 'NO'}")
    print("verify " + ("PASSED" if result.ok else "FAILED"))
    return 0 if result.ok else FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gmqv",
        description=(
            "Gauss-Markov semimartingales: validate factor specs, evaluate "
            "covariance kernels, compute quadratic-variation laws, simulate "
            "paths exactly and verify the law by Monte Carlo.  Spec arguments "
            "may be file paths or bundled names (brownian, ou, stitched, "
            "meanjump)."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="run the sampled structural checks")
    p.add_argument("spec")
    p.add_argument("--grid-points", type=int, default=pm.DEFAULT_GRID_POINTS)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("kernel", help="evaluate the covariance at (s, t)")
    p.add_argument("spec")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--left-s", action="store_true", help="left limit at s")
    p.add_argument("--left-t", action="store_true", help="left limit at t")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("quadvar", help="print the quadratic-variation law at t")
    p.add_argument("spec")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--with-mean", action="store_true")
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_quadvar)

    p = sub.add_parser("simulate", help="write simulated paths as CSV")
    p.add_argument("spec")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--cells", default="2^8", help="cell count, e.g. 256 or 2^8")
    p.add_argument("--paths", type=int, default=1)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("realized", help="write a convergence study as CSV")
    p.add_argument("spec")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--levels", default="6..10", help="e.g. 6..10 or a single level")
    p.add_argument("--paths", type=int, default=2000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--with-mean", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_realized)

    p = sub.add_parser(
        "verify", help="check Monte Carlo moments against the law at one level"
    )
    p.add_argument("spec")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--level", type=int, default=10)
    p.add_argument("--paths", type=int, default=2000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--with-mean", action="store_true")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help; pass both through
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SpecValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return FAILURE
    except SpecFileError as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE_ERROR
    except (SpecError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
