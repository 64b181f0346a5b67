"""Batch command-line front end.

Subcommands
-----------
certify      build a problem, materialize the (preconditioned) operator, and
             write certificate.json, boundary.csv, region.svg.  Exit code 0
             when the certificate passes (lenient: bc < 1 or origin excluded;
             --strict: bc < 1 only), 1 when it fails.
scalability  iteration-count sweep over grids; writes scalability.csv with
             one l2-norm and one H-norm column per preconditioner.
bounds       run one certified solve and overlay the measured residuals with
             the (2+sqrt7) E_j region bound and the eigenvalue bound; writes
             bounds.csv and overlay.svg.

Exit codes: 0 success / certificate pass; 1 certificate fail; 2 usage error
(argparse); 3 dimension guard; 4 numerical failure; 5 I/O failure.

Determinism: identical configuration and --seed produce byte-identical CSV
and JSON, and SVG identical up to float formatting.  FOVK_THREADS caps the
BLAS thread pool.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import fov, polybound, problems
from .exceptions import DimensionGuardError, FovkError
from .krylov import solve_preconditioned
from .linalg import WeightedSpace
from .precond import make_preconditioner, preconditioned_matrix, verify_assumptions
from .problems import GridSpec

EXIT_CERT_FAIL = 1
EXIT_GUARD = 3
EXIT_NUMERIC = 4
EXIT_IO = 5


def _add_common(p):
    p.add_argument("--tol", type=float, default=1e-5, help="relative residual tolerance")
    p.add_argument("--maxit", type=int, default=200, help="maximum GMRES iterations")
    p.add_argument("--angles", type=int, default=256, help="rotation angles for the FOV boundary")
    p.add_argument("--degrees", type=int, default=16, help="maximum polynomial degree")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=1234, help="seed for right-hand sides")
    p.add_argument("--strict", action="store_true",
                   help="certificate passes only on bc < 1 (default also accepts an "
                        "origin-excluding region)")


_VARIANTS = ["diag", "upper", "lower", "inexact-upper"]


def _add_problem(p, grids=False, problem_choices=None):
    p.add_argument("--problem", required=True,
                   choices=problem_choices or ["toeplitz", "oseen", "stokes-darcy", "synthetic"])
    if grids:
        p.add_argument("--grid", type=int, nargs="+", default=[8, 16],
                       help="cells per side, one value per sweep point")
        p.add_argument("--precond", nargs="+", choices=_VARIANTS, default=["diag", "upper"],
                       help="preconditioner variants, one pair of columns each")
    else:
        p.add_argument("--grid", type=int, default=8, help="cells per side")
        p.add_argument("--precond", choices=_VARIANTS, default="upper",
                       help="preconditioner variant")
    p.add_argument("--nu", type=float, default=1.0, help="viscosity (and k for stokes-darcy)")
    p.add_argument("--n", type=int, default=100,
                   help="toeplitz block size / synthetic leading dimension")
    p.add_argument("--m", type=int, default=20, help="synthetic constraint dimension")
    p.add_argument("--eta", type=float, default=0.1, help="synthetic skew norm")
    p.add_argument("--c1", type=float, default=2.0, help="synthetic sup bound C1")
    p.add_argument("--c2", type=float, default=0.5, help="synthetic inf-sup bound C2")
    p.add_argument("--side", choices=["left", "right"], default="left")
    p.add_argument("--norm", choices=["l2", "h", "hinv"], default=None,
                   help="solve norm (default: h for left, hinv for right)")
    p.add_argument("--sweeps", type=int, default=4, help="Gauss-Seidel sweeps (inexact-upper)")


def build_parser():
    ap = argparse.ArgumentParser(prog="fovk", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("certify", help="write a convergence certificate")
    _add_problem(pc)
    _add_common(pc)

    ps = sub.add_parser("scalability", help="iteration counts across grids")
    _add_problem(ps, grids=True, problem_choices=["oseen", "stokes-darcy"])
    _add_common(ps)

    pb = sub.add_parser("bounds", help="bound-versus-residual overlay")
    _add_problem(pb)
    _add_common(pb)
    return ap


def _make_system(args, grid):
    if args.problem == "oseen":
        return problems.oseen_fd(GridSpec(grid), args.nu)
    if args.problem == "stokes-darcy":
        return problems.stokes_darcy_fd(GridSpec(grid), args.nu)
    if args.problem == "synthetic":
        return problems.synthetic(args.n, args.m, args.eta, args.c1, args.c2, seed=args.seed)
    raise ValueError(f"problem {args.problem!r} is not a saddle-point generator")


def _operator_and_space(args):
    """Materialized operator, its solve space, and the system (None for toeplitz)."""
    if args.problem == "toeplitz":
        A = problems.toeplitz_example(args.n)
        return A, WeightedSpace.euclidean(A.shape[0]), None, None
    sysm = _make_system(args, args.grid)
    M = make_preconditioner(sysm, args.precond, side=args.side, sweeps=args.sweeps)
    dim = sysm.n + sysm.m
    if dim > fov.DIMENSION_GUARD:
        raise DimensionGuardError(
            f"operator dimension {dim} exceeds the materialization guard "
            f"{fov.DIMENSION_GUARD}; use a smaller grid")
    A = preconditioned_matrix(sysm, M)
    space = sysm.h_space() if M.side == "left" else sysm.h_space().inverse()
    return A, space, sysm, M


def _write_boundary_csv(path, boundary):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["angle", "re", "im"])
        for th, z in zip(boundary.angles, boundary.points):
            w.writerow([repr(float(th)), repr(float(z.real)), repr(float(z.imag))])


def cmd_certify(args):
    from . import plots

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    A, space, sysm, _ = _operator_and_space(args)
    eta = C1 = C2 = None
    if sysm is not None:
        report = verify_assumptions(sysm)
        eta, C1, C2 = report.eta, report.C1, report.C2
    cert = fov.certificate(A, space, n_angles=args.angles,
                           compute_numerical_radius=A.shape[0] <= 1000,
                           eta=eta, C1=C1, C2=C2)
    with open(out / "certificate.json", "w", encoding="utf-8") as f:
        json.dump(cert.to_json_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    _write_boundary_csv(out / "boundary.csv", cert.boundary)
    plots.region_svg(cert, out / "region.svg")

    passed = cert.cond4_pass if args.strict else (cert.cond4_pass or cert.origin_excluded)
    print(f"a = {cert.a:.6g}  b = {cert.b:.6g}  c = {cert.c:.6g}  bc = {cert.bc:.6g}")
    print(f"cond4 (bc < 1): {'pass' if cert.cond4_pass else 'FAIL'}; "
          f"origin excluded: {cert.origin_excluded}")
    print(f"wrote {out / 'certificate.json'}, boundary.csv, region.svg")
    return 0 if passed else EXIT_CERT_FAIL


def _iteration_cell(trace, maxit):
    return str(trace.iterations) if trace.converged else f">{maxit}"


def cmd_scalability(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    variants = [args.precond] if isinstance(args.precond, str) else list(args.precond)
    rows = []
    for grid in args.grid:
        sysm = _make_system(args, grid)
        rng = np.random.default_rng(args.seed)
        rhs = rng.standard_normal(sysm.n + sysm.m)
        row = {"system_size": sysm.n + sysm.m}
        for variant in variants:
            M = make_preconditioner(sysm, variant, side=args.side, sweeps=args.sweeps)
            for norm in ("l2", "h"):
                _, trace = solve_preconditioned(sysm, M, rhs, tol=args.tol,
                                                maxit=args.maxit, norm=norm)
                row[f"{norm}_{variant}"] = _iteration_cell(trace, args.maxit)
        rows.append(row)
        del sysm
    header = ["system_size"] + [f"{norm}_{v}" for norm in ("l2", "h") for v in variants]
    path = out / "scalability.csv"
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([row[h] for h in header])
    widths = [max(len(h), 8) for h in header]
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for row in rows:
        print("  ".join(str(row[h]).ljust(w) for h, w in zip(header, widths)))
    print(f"wrote {path}")
    return 0


def cmd_bounds(args):
    from . import plots
    from .exceptions import NearDefectiveError

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    A, space, sysm, M = _operator_and_space(args)
    cert = fov.certificate(A, space, n_angles=args.angles)

    rng = np.random.default_rng(args.seed)
    if sysm is not None:
        rhs = rng.standard_normal(sysm.n + sysm.m)
        _, trace = solve_preconditioned(sysm, M, rhs, tol=args.tol, maxit=args.maxit,
                                        norm=args.norm)
    else:
        from .krylov import gmres

        rhs = rng.standard_normal(A.shape[0])
        _, trace = gmres(A, rhs, space=space, tol=args.tol, maxit=args.maxit)
    measured = np.array(trace.residuals_weighted) / trace.residuals_weighted[0]

    n_max = max(len(measured) - 1, args.degrees)
    fov_curve = polybound.gmres_bound_curve(cert, n_max)
    try:
        spec_curve = polybound.spectral_bound(A, space, range(n_max + 1))
    except NearDefectiveError as exc:
        print(f"spectral bound skipped: {exc}")
        spec_curve = None

    path = out / "bounds.csv"
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["degree", "measured", "fov_raw", "fov_clamped",
                    "spectral_raw", "spectral_clamped"])
        fc = fov_curve.clamped()
        sc = spec_curve.clamped() if spec_curve else None
        for j in range(n_max + 1):
            meas = repr(float(measured[j])) if j < len(measured) else ""
            srow = [repr(float(spec_curve.values[j])), repr(float(sc[j]))] if spec_curve else ["", ""]
            w.writerow([j, meas, repr(float(fov_curve.values[j])), repr(float(fc[j]))] + srow)

    curves = [("(2+sqrt7) E_j on Omega_CG", fov_curve)]
    if spec_curve:
        curves.append(("kappa_H(V) eigenvalue bound", spec_curve))
    plots.overlay_svg(out / "overlay.svg", measured, curves,
                      title=f"{args.problem}: measured vs bounds")
    print(f"solve: {trace.iterations} iterations, converged = {trace.converged}")
    print(f"wrote {path} and overlay.svg")
    return 0


def main(argv=None):
    threads = os.environ.get("FOVK_THREADS")
    if threads:
        try:
            from threadpoolctl import threadpool_limits

            threadpool_limits(limits=int(threads))
        except (ImportError, ValueError):
            pass

    args = build_parser().parse_args(argv)
    handlers = {"certify": cmd_certify, "scalability": cmd_scalability, "bounds": cmd_bounds}
    try:
        return handlers[args.command](args)
    except DimensionGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except FovkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
