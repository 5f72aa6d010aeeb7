"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a check fails (or an
integration step fails), 2 for unreadable input or bad options.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from . import expr as E
from .description import DescriptionError, bundled_names, load_description, resolve_path
from .dynamics import IntegratorConfig, hamilton_flow
from .errors import (EvalError, ExprError, NonIntegrableInput, PointOffSurface, StepFailure, UnitFreeError,
                     ZeroConversionFactor)
from .jacobi import (DEFAULT_POINTS, DEFAULT_TOL, conformal_law_check, coisotropy_test, integrability_check,
                     nondegeneracy_check, symbol_squiggle_suite)
from .polys import random_polynomial
from .product import corrupt_product, projection_check, uniqueness_check, verify_product, _assemble
from .report import Report

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
FLOW_TOL = 1e-6
EXTENDED_DPS = 40


class UsageError(Exception):
    pass


def _sampling(args, desc):
    seed = args.seed if args.seed is not None else int(desc.sample.get("seed", 0))
    count = args.points if args.points is not None else int(desc.sample.get("count", DEFAULT_POINTS))
    if count < 1:
        raise UsageError("--points must be at least 1")
    box = {k: tuple(v) for k, v in (desc.sample.get("box") or {}).items()}
    return seed, count, box


def _emit(args, command, header, reports, extra=None):
    passed = all(r.passed for r in reports)
    if args.json:
        doc = {"command": command, **header, "passed": passed, "checks": [r.to_dict() for r in reports]}
        if extra:
            doc.update(extra)
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(f"{command}: " + " ".join(f"{k}={v}" for k, v in header.items()))
        for r in reports:
            print(r.summary())
            if len(r.residuals) > 1:
                for k, v in r.residuals.items():
                    print(f"    {k}: {v:.3e}")
        for k, v in (extra or {}).items():
            print(f"{k}: {v}")
        print("result: " + ("PASS" if passed else "FAIL"))
    return EXIT_OK if passed else EXIT_FAIL


def cmd_check(args) -> int:
    desc = load_description(args.file)
    L = desc.structure
    seed, count, box = _sampling(args, desc)
    pts = L.chart.sample(count, seed, box)
    rng = np.random.default_rng(seed)
    f, g, h = (random_polynomial(L.chart, 3, rng) for _ in range(3))
    dps = EXTENDED_DPS if args.precision == "extended" else None
    reports = [
        integrability_check(L, pts, args.tol, seed),
        nondegeneracy_check(L, pts, args.tol, seed),
        symbol_squiggle_suite(L, f, g, h, pts, args.tol, seed=seed, dps=dps),
    ]
    for zc in desc.unit_conversions:
        try:
            reports.append(conformal_law_check(L, zc, pts=pts, tol=args.tol, seed=seed))
        except ZeroConversionFactor as exc:
            reports.append(Report(f"conformal {zc}", False, math.inf, args.tol, str(exc)))
    header = {"input": args.file, "seed": seed, "points": count, "tol": args.tol, "precision": args.precision}
    return _emit(args, "check", header, reports)


def _parse_x0(text, dim):
    try:
        vals = [float(v) for v in text.replace(" ", "").split(",") if v != ""]
    except ValueError:
        raise UsageError(f"--x0 must be comma-separated numbers, got {text!r}") from None
    if len(vals) != dim:
        raise UsageError(f"--x0 has {len(vals)} values, chart dimension is {dim}")
    return vals


def cmd_flow(args) -> int:
    desc = load_description(args.file)
    L = desc.structure
    if args.hamiltonian is None:
        if len(desc.hamiltonians) != 1:
            raise UsageError(f"choose --hamiltonian from {sorted(desc.hamiltonians)}")
        name = next(iter(desc.hamiltonians))
    else:
        name = args.hamiltonian
    if name not in desc.hamiltonians:
        raise UsageError(f"no hamiltonian {name!r}; available: {sorted(desc.hamiltonians)}")
    if args.x0 is not None:
        x0 = _parse_x0(args.x0, L.chart.dim)
    elif desc.x0 is not None:
        x0 = list(desc.x0)
    else:
        raise UsageError("no --x0 given and the description has no x0")
    try:
        cfg = IntegratorConfig(args.method, args.dt, args.t_end, args.abs_tol, args.rel_tol, args.max_steps)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    h = desc.hamiltonians[name]
    try:
        traj = hamilton_flow(L, h, x0, cfg)
    except StepFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    lines = ["t," + ",".join(L.chart.coords) + ",h,residual"]
    for t, s, hv, res in zip(traj.times, traj.states, traj.h_values, traj.residuals):
        lines.append(",".join("%.17g" % v for v in (t, *s, hv, res)))
    text = "\n".join(lines) + "\n"
    worst = float(np.nanmax(traj.residuals)) if len(traj) >= 3 else math.nan
    passed = bool(worst <= args.tol)
    summary = (f"flow: input={args.file} hamiltonian={name} method={cfg.method} dt={cfg.dt} "
               f"t_end={cfg.t_end} steps={len(traj) - 1} max_residual={worst:.3e} tol={args.tol} "
               + ("PASS" if passed else "FAIL"))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
        print(summary)
    else:
        sys.stdout.write(text)
        print(summary, file=sys.stderr)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_product(args) -> int:
    da, db = load_description(args.file_a), load_description(args.file_b)
    for d, path in ((da, args.file_a), (db, args.file_b)):
        rep = integrability_check(d.structure, None, DEFAULT_TOL)
        if not rep.passed:
            raise NonIntegrableInput(f"{path} fails the integrability check (worst {rep.worst:.3g})")
    ps = corrupt_product(da.structure, db.structure) if args.corrupt else _assemble(
        da.structure, db.structure, "b", corrupt=False)
    seed = args.seed if args.seed is not None else 0
    count = args.points if args.points is not None else DEFAULT_POINTS
    pts = ps.sample(count, seed)
    reports = [
        verify_product(ps, pts, args.tol, seed),
        uniqueness_check(ps, pts, args.tol, seed),
        projection_check(ps, pts, args.tol),
    ]
    header = {"inputs": f"{args.file_a},{args.file_b}", "seed": seed, "points": count, "tol": args.tol,
              "corrupt": bool(args.corrupt)}
    extra = {"coords": ",".join(ps.total.coords), "r12": ",".join(reports[0].extra["r12"])}
    if args.corrupt and all(c == E.ZERO for c in db.structure.r.components):
        extra["note"] = "right factor has R = 0, so zeroing the y-b entries leaves the product unchanged"
    return _emit(args, "product", header, reports, extra)


def _load_points(path, chart):
    p = resolve_path(path)
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise DescriptionError(f"{path}: invalid JSON: {exc}") from None
    rows = data.get("points") if isinstance(data, dict) else data
    if not isinstance(rows, list) or not rows:
        raise DescriptionError(f"{path}: expected a nonempty list of points")
    out = []
    for row in rows:
        if isinstance(row, dict):
            out.append(chart.point(row))
        else:
            out.append(chart.point(list(row)))
    return out


def cmd_coiso(args) -> int:
    desc = load_description(args.file)
    L = desc.structure
    if args.constraints not in desc.constraints:
        raise UsageError(f"no constraint set {args.constraints!r}; available: {sorted(desc.constraints)}")
    pts = _load_points(args.surface_points, L.chart)
    rep = coisotropy_test(L, desc.constraints[args.constraints], pts, args.tol)
    header = {"input": args.file, "constraints": args.constraints, "points": len(pts), "tol": args.tol}
    extra = {"bracket_condition": "PASS" if rep.extra["bracket_condition_passed"] else "FAIL"}
    return _emit(args, "coiso", header, [rep], extra)


def cmd_bundled(args) -> int:
    for name in bundled_names():
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="unitfree", description="Unit-free Hamiltonian mechanics on coordinate charts.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, tol=DEFAULT_TOL):
        p.add_argument("--tol", type=float, default=tol, help=f"pass threshold (default {tol:g})")
        p.add_argument("--points", type=int, default=None, help=f"sample points (default {DEFAULT_POINTS})")
        p.add_argument("--seed", type=int, default=None, help="sampling seed (default 0)")
        p.add_argument("--json", action="store_true", help="machine-readable report")

    p = sub.add_parser("check", help="integrability, non-degeneracy, symbol/squiggle and unit-change checks")
    p.add_argument("file")
    common(p)
    p.add_argument("--precision", choices=("double", "extended"), default="extended",
                   help="arithmetic for the symbol/squiggle identities (default extended, 40 digits)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("flow", help="integrate a Hamiltonian and write a CSV trajectory")
    p.add_argument("file")
    p.add_argument("--hamiltonian", default=None)
    p.add_argument("--x0", default=None, help="comma-separated initial state")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-end", dest="t_end", type=float, default=1.0)
    p.add_argument("--method", choices=("rk4", "rk45"), default="rk4")
    p.add_argument("--abs-tol", dest="abs_tol", type=float, default=1e-10)
    p.add_argument("--rel-tol", dest="rel_tol", type=float, default=1e-10)
    p.add_argument("--max-steps", dest="max_steps", type=int, default=10_000_000)
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    p.add_argument("--tol", type=float, default=FLOW_TOL,
                   help=f"bound on the conservation residual (default {FLOW_TOL:g})")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("product", help="build the product structure and run its identity suite")
    p.add_argument("file_a")
    p.add_argument("file_b")
    common(p)
    p.add_argument("--corrupt", action="store_true", help="zero the y-b coefficients (negative control)")
    p.set_defaults(func=cmd_product)

    p = sub.add_parser("coiso", help="coisotropy of a constraint set at given surface points")
    p.add_argument("file")
    p.add_argument("--constraints", required=True)
    p.add_argument("--surface-points", dest="surface_points", required=True)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_coiso)

    p = sub.add_parser("bundled", help="list bundled example files")
    p.set_defaults(func=cmd_bundled)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except PointOffSurface as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, DescriptionError, FileNotFoundError, IsADirectoryError, ExprError, EvalError,
            NonIntegrableInput, UnitFreeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
