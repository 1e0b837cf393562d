"""End-to-end solves of the Poisson-Neumann problem through the trace system.

The full solve runs: build the right-hand side, project it off the left
null vector of L, form the reduced right-hand side b_S = B A^{-1} f and
project it off the left null vector of S, run GMRES on the trace system
in one of four modes, then recover the interior solution

    u = A^{-1} (f - E x_S)

and shift it to zero mean to fix the Neumann gauge.

Modes:
    plain            GMRES on S x = b_S
    jacobi           GMRES on S M^{-1} z = b_S, x = M^{-1} z
    deflated         GMRES on P S z = P b_S, x = Q z + Z C^+ Z^T b_S
    jacobi-deflated  both of the above combined
"""

import time
from dataclasses import dataclass

import numpy as np

from .assembly import (
    SmpmOperators,
    build_operators,
    build_rhs,
    dense_L,
    solve_A,
    sparse_L,
)
from .gll import GllBasis
from .krylov import GmresOptions, gmres
from .mesh import Mesh, build_mesh, include_gamma
from .nullspace import left_null_vector, left_null_vector_sparse, project_out
from .schur import SchurContext, build_schur_context

__all__ = [
    "MODES",
    "SolverReport",
    "Solution",
    "SolverContext",
    "build_solver_context",
    "solve",
    "recover_interior",
]

MODES = ("plain", "jacobi", "deflated", "jacobi-deflated")


@dataclass
class SolverReport:
    """Outcome of one trace solve."""

    mode: str
    iterations: int
    converged: bool
    residuals: np.ndarray
    wall_time: float
    gmres_time: float


@dataclass
class Solution:
    """Interior solution, its trace and the solve report."""

    u: np.ndarray
    x_S: np.ndarray
    report: SolverReport


@dataclass
class SolverContext:
    """Mesh, operators, null vectors and trace machinery for one grid."""

    mesh: Mesh
    basis: GllBasis
    ops: SmpmOperators
    schur: SchurContext
    u_L: np.ndarray

    @property
    def k(self) -> int:
        return self.ops.interfaces.k

    @property
    def d(self) -> int:
        return self.ops.interfaces.d


def build_solver_context(
    n: int,
    mx: int,
    my: int,
    Lx: float = 1.0,
    Ly: float = 1.0,
    tau: float | None = None,
    dense_null_cutoff: int = 3000,
    want_dense_schur: bool = False,
) -> SolverContext:
    """Assemble everything needed to solve repeatedly on one grid."""
    mesh = build_mesh(n, mx, my, Lx, Ly)
    ops = build_operators(mesh, tau=tau)
    if mesh.r <= dense_null_cutoff:
        u_L = left_null_vector(dense_L(ops))
    else:
        u_L = left_null_vector_sparse(sparse_L(ops))
    schur = build_schur_context(
        ops, dense_null_cutoff=dense_null_cutoff, want_dense=want_dense_schur
    )
    return SolverContext(mesh=mesh, basis=ops.basis, ops=ops, schur=schur, u_L=u_L)


def solve(
    ctx: SolverContext,
    f_samples: np.ndarray,
    g_samples: np.ndarray | None = None,
    mode: str = "jacobi-deflated",
    options: GmresOptions | None = None,
) -> Solution:
    """Solve the Neumann problem for the sampled data in the given mode."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}, expected one of {MODES}")
    t0 = time.perf_counter()
    rhs = build_rhs(ctx.mesh, f_samples, g_samples, ctx.ops.tau)
    ft = project_out(rhs, ctx.u_L)
    iset = ctx.ops.interfaces

    if iset.k == 0:
        u = solve_A(ctx.ops, ft)
        u -= u.mean()
        wall = time.perf_counter() - t0
        report = SolverReport(mode, 0, True, np.empty(0), wall, 0.0)
        return Solution(u=u, x_S=np.zeros(0), report=report)

    b_S = ctx.ops.B @ solve_A(ctx.ops, ft)
    b_S = project_out(b_S, ctx.schur.u_S)
    sch = ctx.schur

    t1 = time.perf_counter()
    if mode == "plain":
        z, stats = gmres(lambda v: sch.S @ v, b_S, options)
        x_S = z
    elif mode == "jacobi":
        z, stats = gmres(lambda v: sch.S @ sch.apply_Minv(v), b_S, options)
        x_S = sch.apply_Minv(z)
    elif mode == "deflated":
        z, stats = gmres(lambda v: sch.apply_P(sch.S @ v), sch.apply_P(b_S), options)
        x_S = sch.apply_Q(z) + sch.Z @ sch.coarse.solve(sch.Z.T @ b_S)
    else:  # jacobi-deflated
        z, stats = gmres(
            lambda v: sch.apply_P(sch.S @ sch.apply_Minv(v)),
            sch.apply_P(b_S),
            options,
        )
        x_S = sch.apply_Q(sch.apply_Minv(z)) + sch.Z @ sch.coarse.solve(sch.Z.T @ b_S)
    gmres_time = time.perf_counter() - t1

    u = recover_interior(ctx.ops, ft, x_S)
    u -= u.mean()
    wall = time.perf_counter() - t0
    report = SolverReport(
        mode=mode,
        iterations=stats.iterations,
        converged=stats.converged,
        residuals=stats.residuals,
        wall_time=wall,
        gmres_time=gmres_time,
    )
    return Solution(u=u, x_S=x_S, report=report)


def recover_interior(ops: SmpmOperators, rhs: np.ndarray, x_S: np.ndarray) -> np.ndarray:
    """Back-substitute the trace: u = A^{-1} (rhs - E x_S), blockwise."""
    return solve_A(ops, rhs - include_gamma(ops.interfaces, x_S))
