"""Manufactured-solution studies: convergence sweeps and iteration counts.

The test problem on [0, Lx] x [0, Ly] is

    f(x, y) = cos(lam*pi*x/Lx) * cos(lam*pi*y/Ly),  g = 0,

whose zero-mean solution of the Neumann problem lap(u) = f is

    u(x, y) = -f(x, y) / (lam^2 pi^2 (1/Lx^2 + 1/Ly^2)).

Studies sweep either the element count at fixed order (kind "h"), the
polynomial order at fixed element count (kind "p"), or both (kind
"spectral"), solving every cell in each requested mode and recording
iteration counts, analytic errors and wall times as rows of a delimited
report.
"""

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from .assembly import SmpmOperators, build_rhs, dense_L
from .driver import MODES, build_solver_context, solve
from .krylov import GmresOptions
from .mesh import Mesh
from .nullspace import left_null_vector, project_out
from .schur import DenseCapError

__all__ = [
    "CSV_COLUMNS",
    "DENSE_ORACLE_CAP",
    "StudySpec",
    "manufactured_problem",
    "analytic_error",
    "dense_oracle",
    "run_study",
    "write_csv",
]

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "n",
    "mx",
    "my",
    "k",
    "d",
    "mode",
    "iterations",
    "converged",
    "analytic_error",
    "wall_time",
)

DENSE_ORACLE_CAP = 4000

H_SWEEP_DEFAULT = (4, 8, 12, 16, 20, 24, 28, 32)
P_SWEEP_DEFAULT = (4, 6, 8, 10, 12, 14)


def manufactured_problem(mesh: Mesh, lam: int = 7):
    """Sampled forcing and exact zero-mean solution of the test problem.

    Returns (f_samples, u_exact_samples); the Neumann data g is
    identically zero for this family.
    """
    if int(lam) != lam or lam < 1:
        raise ValueError(f"wavenumber must be a positive integer, got {lam}")
    x = mesh.coords[:, 0]
    y = mesh.coords[:, 1]
    f = np.cos(lam * np.pi * x / mesh.Lx) * np.cos(lam * np.pi * y / mesh.Ly)
    denom = lam**2 * np.pi**2 * (1.0 / mesh.Lx**2 + 1.0 / mesh.Ly**2)
    return f, -f / denom


def analytic_error(u: np.ndarray, u_ref: np.ndarray) -> float:
    """2-norm of the difference after shifting both fields to zero mean."""
    u = np.asarray(u, dtype=float)
    u_ref = np.asarray(u_ref, dtype=float)
    if u.shape != u_ref.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {u_ref.shape}")
    du = (u - u.mean()) - (u_ref - u_ref.mean())
    return float(np.linalg.norm(du))


def dense_oracle(
    ops: SmpmOperators,
    f_samples: np.ndarray,
    g_samples: np.ndarray | None = None,
    cap: int = DENSE_ORACLE_CAP,
) -> np.ndarray:
    """Reference solution from a dense least-squares solve of L u = f.

    Materializes L, projects the right-hand side off its left null
    vector and returns the zero-mean minimum-norm least-squares
    solution. Guarded by a size cap; this path exists to cross-check the
    trace solver on small grids.
    """
    if ops.mesh.r > cap:
        raise DenseCapError(f"grid size {ops.mesh.r} exceeds dense oracle cap {cap}")
    L = dense_L(ops)
    rhs = build_rhs(ops.mesh, f_samples, g_samples, ops.tau)
    u_L = left_null_vector(L)
    ft = project_out(rhs, u_L)
    u, *_ = np.linalg.lstsq(L, ft, rcond=1e-10)
    return u - u.mean()


@dataclass(frozen=True)
class StudySpec:
    """One convergence or iteration study.

    kind "h" sweeps m_values at fixed order, "p" sweeps p_values (the
    polynomial order; each cell uses p+1 nodes) at fixed element count,
    "spectral" concatenates both sweeps, and "single" solves one grid.
    """

    kind: str
    n: int = 5
    mx: int = 4
    my: int = 4
    m_values: tuple = H_SWEEP_DEFAULT
    p_values: tuple = P_SWEEP_DEFAULT
    lam: int = 7
    Lx: float = 1.0
    Ly: float = 1.0
    modes: tuple = MODES
    rel_tol: float = 1e-10
    max_iter: int | None = None
    tau: float | None = None

    def __post_init__(self):
        if self.kind not in ("h", "p", "spectral", "single"):
            raise ValueError(f"unknown study kind {self.kind!r}")
        bad = [m for m in self.modes if m not in MODES]
        if bad:
            raise ValueError(f"unknown modes {bad}, expected a subset of {MODES}")

    def cells(self) -> list[tuple[int, int, int]]:
        """Grid cells (n, mx, my) visited by the study, in order."""
        if self.kind == "h":
            return [(self.n, m, m) for m in self.m_values]
        if self.kind == "p":
            return [(p + 1, self.mx, self.my) for p in self.p_values]
        if self.kind == "spectral":
            seen = []
            for cell in [(self.n, m, m) for m in self.m_values] + [
                (p + 1, self.mx, self.my) for p in self.p_values
            ]:
                if cell not in seen:
                    seen.append(cell)
            return seen
        return [(self.n, self.mx, self.my)]


def _failure_row(n, mx, my, mode, reason):
    logger.warning("cell (n=%d, mx=%d, my=%d, mode=%s) failed: %s", n, mx, my, mode, reason)
    return {
        "n": n,
        "mx": mx,
        "my": my,
        "k": -1,
        "d": -1,
        "mode": mode,
        "iterations": 0,
        "converged": False,
        "analytic_error": math.nan,
        "wall_time": 0.0,
    }


def run_study(spec: StudySpec, progress=None) -> list[dict]:
    """Run every cell and mode of the study, returning one row dict each.

    A failing cell is recorded with converged=False and the study moves
    on. ``progress`` may be a callable receiving each finished row.
    """
    rows = []
    for n, mx, my in spec.cells():
        try:
            ctx = build_solver_context(n, mx, my, spec.Lx, spec.Ly, tau=spec.tau)
            f, u_exact = manufactured_problem(ctx.mesh, spec.lam)
        except Exception as exc:
            for mode in spec.modes:
                row = _failure_row(n, mx, my, mode, exc)
                rows.append(row)
                if progress:
                    progress(row)
            continue
        options = GmresOptions(rel_tol=spec.rel_tol, max_iter=spec.max_iter)
        for mode in spec.modes:
            try:
                sol = solve(ctx, f, None, mode, options)
                row = {
                    "n": n,
                    "mx": mx,
                    "my": my,
                    "k": ctx.k,
                    "d": ctx.d,
                    "mode": mode,
                    "iterations": sol.report.iterations,
                    "converged": bool(sol.report.converged),
                    "analytic_error": analytic_error(sol.u, u_exact),
                    "wall_time": sol.report.wall_time,
                }
            except Exception as exc:
                row = _failure_row(n, mx, my, mode, exc)
            rows.append(row)
            if progress:
                progress(row)
    return rows


def write_csv(rows: list[dict], path) -> None:
    """Write study rows with the fixed column set and order."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            out = dict(row)
            out["converged"] = "true" if row["converged"] else "false"
            out["analytic_error"] = f"{row['analytic_error']:.12e}"
            out["wall_time"] = f"{row['wall_time']:.6f}"
            writer.writerow(out)
