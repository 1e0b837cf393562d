"""Command line interface.

Two subcommands:

    solve   solve the manufactured Neumann problem on one grid
    study   run an h-, p- or combined convergence study

Both write a delimited report when --out is given and, unless
--no-figures is passed, render the matching figure next to it.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from .driver import MODES, build_solver_context, solve
from .experiments import (
    DENSE_ORACLE_CAP,
    StudySpec,
    analytic_error,
    dense_oracle,
    manufactured_problem,
    run_study,
    write_csv,
)
from .krylov import GmresOptions

ORACLE_TOL = 1e-8


def _add_common(parser):
    parser.add_argument("--n", type=int, default=5, help="GLL nodes per element side")
    parser.add_argument("--mx", type=int, default=4, help="elements in x")
    parser.add_argument("--my", type=int, default=4, help="elements in y")
    parser.add_argument(
        "--lambda", dest="lam", type=int, default=7, help="wavenumber of the test data"
    )
    parser.add_argument("--lx", type=float, default=1.0, help="domain length in x")
    parser.add_argument("--ly", type=float, default=1.0, help="domain length in y")
    parser.add_argument("--tol", type=float, default=1e-10, help="GMRES relative tolerance")
    parser.add_argument(
        "--tau", type=float, default=None, help="penalty strength (default 2(n-1)^2/min(h))"
    )
    parser.add_argument("--out", type=Path, default=None, help="CSV report path")
    parser.add_argument(
        "--dump-matrices",
        type=Path,
        default=None,
        metavar="DIR",
        help="write the assembled operators in Matrix Market form",
    )
    parser.add_argument(
        "--oracle",
        action="store_true",
        help="cross-check against a dense least-squares solve (small grids)",
    )
    parser.add_argument(
        "--no-figures", action="store_true", help="skip figure rendering next to --out"
    )


def _parse_int_list(text):
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smpm-schur",
        description="Spectral multidomain Poisson-Neumann solver on the interface Schur complement",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve the test problem on one grid")
    _add_common(p_solve)
    p_solve.add_argument(
        "--mode", choices=MODES, default="jacobi-deflated", help="trace solver variant"
    )

    p_study = sub.add_parser("study", help="run a convergence/iteration study")
    _add_common(p_study)
    p_study.add_argument(
        "--kind", choices=("spectral", "h", "p"), required=True, help="study type"
    )
    p_study.add_argument(
        "--mode",
        action="append",
        choices=MODES,
        default=None,
        help="solver variant (repeatable; default: all)",
    )
    p_study.add_argument(
        "--m-values",
        type=_parse_int_list,
        default=None,
        help="comma-separated element counts for the h sweep",
    )
    p_study.add_argument(
        "--p-values",
        type=_parse_int_list,
        default=None,
        help="comma-separated polynomial orders for the p sweep",
    )
    return parser


def _dump(args, ctx):
    if args.dump_matrices is not None:
        from .dump import dump_matrices

        written = dump_matrices(args.dump_matrices, ctx.ops, ctx.schur)
        print(f"wrote {len(written)} matrices to {args.dump_matrices}")


def _run_solve(args) -> int:
    ctx = build_solver_context(
        args.n, args.mx, args.my, args.lx, args.ly, tau=args.tau
    )
    f, u_exact = manufactured_problem(ctx.mesh, args.lam)
    sol = solve(ctx, f, None, args.mode, GmresOptions(rel_tol=args.tol))
    err = analytic_error(sol.u, u_exact)
    rep = sol.report
    print(
        f"grid n={args.n} mx={args.mx} my={args.my} "
        f"(r={ctx.mesh.r}, k={ctx.k}, d={ctx.d}), tau={ctx.ops.tau:g}"
    )
    print(
        f"mode={rep.mode} iterations={rep.iterations} converged={rep.converged} "
        f"error={err:.6e} wall={rep.wall_time:.3f}s"
    )
    ok = rep.converged

    if args.oracle:
        if ctx.mesh.r > DENSE_ORACLE_CAP:
            print(
                f"oracle check skipped: r={ctx.mesh.r} exceeds cap {DENSE_ORACLE_CAP}",
                file=sys.stderr,
            )
            ok = False
        else:
            u_ref = dense_oracle(ctx.ops, f, None)
            rel = analytic_error(sol.u, u_ref) / max(np.linalg.norm(u_ref), 1e-300)
            passed = rel <= ORACLE_TOL
            print(f"oracle relative difference {rel:.3e} ({'ok' if passed else 'MISMATCH'})")
            ok = ok and passed

    _dump(args, ctx)

    if args.out is not None:
        row = {
            "n": args.n,
            "mx": args.mx,
            "my": args.my,
            "k": ctx.k,
            "d": ctx.d,
            "mode": rep.mode,
            "iterations": rep.iterations,
            "converged": rep.converged,
            "analytic_error": err,
            "wall_time": rep.wall_time,
        }
        write_csv([row], args.out)
        print(f"wrote {args.out}")
        if not args.no_figures and rep.residuals.size:
            from .plots import render_residual_figure

            fig_path = args.out.with_suffix(".png")
            render_residual_figure({rep.mode: rep.residuals}, fig_path)
            print(f"wrote {fig_path}")
    return 0 if ok else 1


def _run_study(args) -> int:
    kwargs = dict(
        kind=args.kind,
        n=args.n,
        mx=args.mx,
        my=args.my,
        lam=args.lam,
        Lx=args.lx,
        Ly=args.ly,
        modes=tuple(args.mode) if args.mode else MODES,
        rel_tol=args.tol,
        tau=args.tau,
    )
    if args.m_values:
        kwargs["m_values"] = args.m_values
    if args.p_values:
        kwargs["p_values"] = args.p_values
    spec = StudySpec(**kwargs)

    def report(row):
        print(
            f"n={row['n']:3d} mx={row['mx']:3d} my={row['my']:3d} "
            f"mode={row['mode']:<16s} iterations={row['iterations']:4d} "
            f"converged={str(row['converged']).lower():5s} "
            f"error={row['analytic_error']:.6e} wall={row['wall_time']:.3f}s"
        )

    rows = run_study(spec, progress=report)
    out = args.out if args.out is not None else Path(f"smpm_study_{args.kind}.csv")
    write_csv(rows, out)
    print(f"wrote {out}")
    if not args.no_figures:
        from .plots import render_study_figure

        fig_path = out.with_suffix(".png")
        render_study_figure(rows, args.kind, fig_path)
        print(f"wrote {fig_path}")
    return 0 if all(row["converged"] for row in rows) else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "solve":
        return _run_solve(args)
    return _run_study(args)


if __name__ == "__main__":
    sys.exit(main())
