"""Left null vectors of the singular pure-Neumann operators.

The penalized Poisson-Neumann operator, its Schur complement and the
coarse deflation matrix all carry a one-dimensional rank deficiency.
Solvability requires projecting right-hand sides onto the orthogonal
complement of the left null vector, which this module computes either by
a dense SVD or, for large operators, by inverse iteration on the
transpose through a sparse LU factorization.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "NullSpaceError",
    "left_null_vector",
    "left_null_vector_sparse",
    "project_out",
]


class NullSpaceError(RuntimeError):
    """Raised when the expected one-dimensional null space is absent."""


def _fix_sign(u: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(u)))
    return -u if u[i] < 0 else u


def left_null_vector(op: np.ndarray, rel_tol: float = 1e-8) -> np.ndarray:
    """Unit left null vector of a square matrix via dense SVD.

    Requires exactly one singular value below rel_tol times the
    Frobenius norm; raises NullSpaceError otherwise. The sign is fixed
    so the entry of largest magnitude is positive.
    """
    op = np.asarray(op, dtype=float)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {op.shape}")
    U, s, _ = np.linalg.svd(op)
    fro = float(np.sqrt(np.sum(s * s)))
    if s[-1] > rel_tol * fro:
        raise NullSpaceError(
            f"no null direction: smallest singular value {s[-1]:.3e} "
            f"exceeds {rel_tol:.1e} * ||op||_F = {rel_tol * fro:.3e}"
        )
    if op.shape[0] >= 2 and s[-2] <= rel_tol * fro:
        raise NullSpaceError("null space dimension exceeds one")
    return _fix_sign(U[:, -1])


def left_null_vector_sparse(
    op: sp.spmatrix,
    tol: float = 1e-12,
    max_iter: int = 500,
    seed: int = 0,
) -> np.ndarray:
    """Unit left null vector of a sparse singular matrix.

    Runs inverse iteration on op^T through a sparse LU factorization; if
    the factorization fails because the matrix is exactly singular, a
    tiny diagonal shift is added and convergence is still judged against
    the unshifted operator. The iteration stops once ||op^T x|| falls
    below tol times the Frobenius norm of op.
    """
    op = op.tocsr()
    if op.shape[0] != op.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {op.shape}")
    m = op.shape[0]
    fro = float(np.sqrt(np.sum(op.data * op.data)))
    if fro == 0.0:
        raise NullSpaceError("zero operator has no unique null direction")
    opT = op.T.tocsc()
    try:
        lu = spla.splu(opT)
    except RuntimeError:
        shift = 1e-13 * fro / np.sqrt(m)
        lu = spla.splu((opT + shift * sp.eye(m, format="csc")).tocsc())
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(m)
    x /= np.linalg.norm(x)
    for _ in range(max_iter):
        y = lu.solve(x)
        ny = np.linalg.norm(y)
        if not np.isfinite(ny) or ny == 0.0:
            raise NullSpaceError("inverse iteration broke down")
        x = _fix_sign(y / ny)
        if np.linalg.norm(opT @ x) <= tol * fro:
            return x
    raise NullSpaceError(
        f"inverse iteration did not reach tol={tol:.1e} in {max_iter} steps"
    )


def project_out(v: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Remove the component of v along the unit vector u."""
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    if v.shape != u.shape:
        raise ValueError(f"shape mismatch: {v.shape} vs {u.shape}")
    return v - u * (u @ v)
