"""Right-preconditioned GMRES with Givens rotations.

Plain restarted GMRES on a matrix-free operator. The Arnoldi basis is
built with modified Gram-Schmidt plus one selective reorthogonalization
pass when cancellation eats more than a factor 1/sqrt(2) of the new
vector, and the least-squares problem is updated with Givens rotations
so the residual estimate is available at every step.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

__all__ = ["GmresOptions", "SolveStats", "gmres"]

_REORTH_TRIGGER = 1.0 / np.sqrt(2.0)
_BREAKDOWN_REL = 1e-14


@dataclass(frozen=True)
class GmresOptions:
    """Tolerance and iteration limits for one GMRES run.

    ``rel_tol`` is measured against the right-hand side norm;
    ``max_iter`` defaults to the problem dimension and ``restart`` to
    no restarting (one full cycle).
    """

    rel_tol: float = 1e-10
    max_iter: int | None = None
    restart: int | None = None

    def __post_init__(self):
        if self.rel_tol <= 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_iter is not None and self.max_iter < 0:
            raise ValueError(f"max_iter must be nonnegative, got {self.max_iter}")
        if self.restart is not None and self.restart < 1:
            raise ValueError(f"restart must be at least one, got {self.restart}")


@dataclass
class SolveStats:
    """Iteration count, per-iteration relative residuals and success flag."""

    iterations: int
    residuals: np.ndarray
    converged: bool


def gmres(apply_op, b, options: GmresOptions | None = None):
    """Solve op(x) = b, returning (x, SolveStats).

    ``apply_op`` is a callable mapping a vector to op times that vector.
    The residual history holds one relative residual estimate per
    iteration, concatenated across restart cycles; within a cycle the
    estimates are non-increasing. A breakdown of the Arnoldi recurrence
    terminates the run, with convergence decided by the true residual.
    """
    opts = options if options is not None else GmresOptions()
    b = np.asarray(b, dtype=float)
    m = b.size
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(m), SolveStats(0, np.empty(0), True)
    max_iter = opts.max_iter if opts.max_iter is not None else m
    restart = opts.restart if opts.restart is not None else max(max_iter, 1)

    x = None  # None encodes the zero initial guess
    residuals: list[float] = []
    total = 0
    converged = False
    while total < max_iter and not converged:
        cycle = min(restart, max_iter - total)
        x, used, converged, breakdown = _gmres_cycle(
            apply_op, b, x, bnorm, opts.rel_tol, cycle, residuals
        )
        total += used
        if breakdown or used == 0:
            break
    if x is None:
        x = np.zeros(m)
    return x, SolveStats(total, np.asarray(residuals), converged)


def _gmres_cycle(apply_op, b, x0, bnorm, rel_tol, cycle, residuals):
    m = b.size
    r0 = b if x0 is None else b - apply_op(x0)
    beta = float(np.linalg.norm(r0))
    if beta <= rel_tol * bnorm:
        return (np.zeros(m) if x0 is None else x0), 0, True, False

    V = np.empty((cycle + 1, m))
    V[0] = r0 / beta
    H = np.zeros((cycle + 1, cycle))
    cs = np.empty(cycle)
    sn = np.empty(cycle)
    g = np.zeros(cycle + 1)
    g[0] = beta

    used = 0
    converged = False
    breakdown = False
    for j in range(cycle):
        w = apply_op(V[j])
        wnorm0 = float(np.linalg.norm(w))
        for i in range(j + 1):
            hij = V[i] @ w
            w -= hij * V[i]
            H[i, j] = hij
        wnorm1 = float(np.linalg.norm(w))
        if wnorm1 < _REORTH_TRIGGER * wnorm0:
            dh = V[: j + 1] @ w
            w -= V[: j + 1].T @ dh
            H[: j + 1, j] += dh
            wnorm1 = float(np.linalg.norm(w))
        hj1 = wnorm1

        for i in range(j):
            t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
            H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
            H[i, j] = t
        denom = float(np.hypot(H[j, j], hj1))
        if denom == 0.0:
            # the operator annihilated the subspace; no further progress
            breakdown = True
            break
        cs[j] = H[j, j] / denom
        sn[j] = hj1 / denom
        H[j, j] = denom
        g[j + 1] = -sn[j] * g[j]
        g[j] = cs[j] * g[j]

        used = j + 1
        rel = abs(g[j + 1]) / bnorm
        residuals.append(rel)
        if hj1 <= _BREAKDOWN_REL * wnorm0:
            breakdown = True
        if rel <= rel_tol or breakdown:
            converged = rel <= rel_tol
            break
        V[j + 1] = w / hj1

    if used == 0:
        x = np.zeros(m) if x0 is None else x0
    else:
        y = sla.solve_triangular(H[:used, :used], g[:used], lower=False)
        dx = V[:used].T @ y
        x = dx if x0 is None else x0 + dx

    if breakdown and used > 0:
        true_rel = float(np.linalg.norm(b - apply_op(x))) / bnorm
        residuals[-1] = true_rel
        converged = true_rel <= rel_tol
    return x, used, converged, breakdown
