"""Command-line interface: solve, sweep, verify, profiles.

Exit codes: 0 success, 1 verification failure, 2 usage, 3 bracketing,
4 numerical/infrastructure.  Every failure prints one line
``error:<kind>:<reason>`` on stderr.
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import asymptotics_lab as lab
from . import bubble_profiles as bp
from . import functionals as fn
from .errors import BracketError, DomainError, HyperMTError
from .radial_solver import C2_LIMIT, ShootingConfig, fitted_decay_rate, shoot_lambda, solve_for_lambda
from .serialize import csv_text, dumps

SCHEMA_VERSION = 1

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_BRACKET, EXIT_NUMERICAL = 0, 1, 2, 3, 4

PROFILE_HEADER = ("r", "eta0", "w0", "w0_prime", "z0", "z0_prime")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fail(kind: str, message: str, code: int) -> int:
    msg = " ".join(str(message).split())
    print(f"error:{kind}:{msg}", file=sys.stderr)
    return code


def _write(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _config(args) -> ShootingConfig:
    try:
        return ShootingConfig(s_max=args.s_max, ivp_tol=args.ivp_tol, bisect_tol=args.bisect_tol)
    except DomainError as exc:
        raise UsageError(str(exc))


def _open_lambda(x: float, what: str):
    if not (0 < x < 0.25):
        raise UsageError(f"{what} = {x!r} outside (0, 1/4)")


def parse_lambda_grid(text: str) -> list:
    """a:b:n[:geom] -> ascending list of n values between a and b."""
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise UsageError(f"lambda grid {text!r} must look like a:b:n[:geom]")
    try:
        a, b = float(parts[0]), float(parts[1])
        n = int(parts[2])
    except ValueError:
        raise UsageError(f"lambda grid {text!r}: a, b must be reals and n an integer")
    mode = parts[3] if len(parts) == 4 else "lin"
    if mode not in ("lin", "geom"):
        raise UsageError(f"lambda grid spacing {mode!r} must be lin or geom")
    if n < 1:
        raise UsageError("lambda grid needs n >= 1")
    for v in (a, b):
        _open_lambda(v, "lambda grid endpoint")
    if n == 1:
        if a != b:
            raise UsageError("a single-point grid needs a == b")
        return [a]
    vals = np.geomspace(a, b, n) if mode == "geom" else np.linspace(a, b, n)
    vals = sorted(float(v) for v in vals)
    if len(set(vals)) != len(vals):
        raise UsageError("lambda grid has repeated points")
    return vals


# ---------------------------------------------------------------- commands

def cmd_solve(args) -> int:
    if (args.lam is None) == (args.c is None):
        raise UsageError("give exactly one of --lambda or --c")
    config = _config(args)
    if args.lam is not None:
        _open_lambda(args.lam, "lambda")
        sol = solve_for_lambda(args.lam, config)
        lam = args.lam
    else:
        if not (args.c > 0 and args.c * args.c <= C2_LIMIT):
            raise UsageError(f"c = {args.c!r} outside (0, sqrt({C2_LIMIT:g})]")
        lam, sol = shoot_lambda(args.c, config)
    e = fn.energies(sol)
    poh = fn.pohozaev_residual(sol, lab.POHOZAEV_D)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "lambda": lam,
        "c": sol.c,
        "r_lambda": sol.r_lambda,
        "lambda_c2": lam * sol.c ** 2,
        "decay_rate": fitted_decay_rate(sol),
        "tail_amplitude": sol.tail_amplitude,
        "energies": e.as_dict(),
        "pohozaev": {"d": poh.d, "residual": poh.residual, "relative": poh.relative},
        "grid_summary": {"n_points": int(sol.grid.size), "s_join": sol.s_join, "s_max": sol.s_max},
    }
    _write(dumps(doc), args.out)
    return EXIT_OK


def sweep_csv(records) -> str:
    return csv_text(lab.CSV_HEADER, [r.csv_row() for r in records])


def cmd_sweep(args) -> int:
    grid = parse_lambda_grid(args.lambda_grid)
    config = _config(args)
    records = lab.run_sweep(grid, config, threads=args.threads)
    _write(sweep_csv(records), args.out)
    bad = [r for r in records if not r.ok]
    if bad:
        return _fail("numerical", f"{len(bad)} of {len(records)} rows failed; first: {bad[0].status}",
                     EXIT_NUMERICAL)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.suite not in lab.SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; expected one of {', '.join(lab.SUITES)}")
    config = _config(args)
    report = lab.full_verify(config, suite=args.suite, inject_w0_offset=args.inject_w0_offset,
                             threads=args.threads)
    _write(report.to_json(), args.out)
    if not report.passed:
        return _fail("verification", f"{len(report.failures)} checks failed: {', '.join(report.failures)}",
                     EXIT_VERIFY)
    return EXIT_OK


def profile_radii(r_max: float, samples: int) -> np.ndarray:
    r = np.geomspace(1e-3, r_max, samples)
    if 1e-3 <= 1.0 <= r_max:
        r = np.union1d(r, [1.0])
    return r


def cmd_profiles(args) -> int:
    if not (args.rmax > 1e-3 and math.isfinite(args.rmax)):
        raise UsageError("--rmax must be a finite real above 1e-3")
    if args.rmax > 1e18:
        raise UsageError("--rmax above 1e18 is beyond the z0 grid")
    if args.samples < 2:
        raise UsageError("--samples must be at least 2")
    r = profile_radii(args.rmax, args.samples)
    z, zp = bp.default_z0().evaluate(r)
    rows = zip(r, bp.eta0(r), bp.w0(r), bp.w0_prime(r), z, zp)
    _write(csv_text(PROFILE_HEADER, rows), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hypermt", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def solver_flags(q):
        d = ShootingConfig()
        q.add_argument("--s-max", type=float, default=d.s_max)
        q.add_argument("--ivp-tol", type=float, default=d.ivp_tol)
        q.add_argument("--bisect-tol", type=float, default=d.bisect_tol)
        q.add_argument("--out", default=None, help="output file (default stdout)")

    q = sub.add_parser("solve", help="admissible solution at fixed lambda or peak height")
    q.add_argument("--lambda", dest="lam", type=float)
    q.add_argument("--c", type=float)
    solver_flags(q)
    q.set_defaults(func=cmd_solve)

    q = sub.add_parser("sweep", help="functionals along a lambda grid (CSV)")
    q.add_argument("--lambda-grid", required=True, help="a:b:n[:geom]")
    q.add_argument("--threads", type=int, default=None, help="workers (default HYPERMT_THREADS, 0 = auto)")
    solver_flags(q)
    q.set_defaults(func=cmd_sweep)

    q = sub.add_parser("verify", help="run the verification suite (JSON report)")
    q.add_argument("--suite", default="all")
    q.add_argument("--threads", type=int, default=None)
    q.add_argument("--inject-w0-offset", type=float, default=0.0, help=argparse.SUPPRESS)
    solver_flags(q)
    q.set_defaults(func=cmd_verify)

    q = sub.add_parser("profiles", help="export eta0, w0, z0 samples (CSV)")
    q.add_argument("--rmax", type=float, default=1e4)
    q.add_argument("--samples", type=int, default=200)
    q.add_argument("--out", default=None)
    q.set_defaults(func=cmd_profiles)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing command (solve, sweep, verify, profiles)")
        return args.func(args)
    except UsageError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    except BracketError as exc:
        return _fail("bracket", str(exc), EXIT_BRACKET)
    except DomainError as exc:
        return _fail("domain", str(exc), EXIT_USAGE)
    except HyperMTError as exc:
        return _fail("numerical", str(exc), EXIT_NUMERICAL)
    except (ArithmeticError, OSError) as exc:
        return _fail("infrastructure", f"{type(exc).__name__}: {exc}", EXIT_NUMERICAL)


if __name__ == "__main__":
    sys.exit(main())
