"""One-dimensional Gauss-Lobatto-Legendre collocation machinery.

Provides the GLL nodes and quadrature weights on the reference interval
[-1, 1], the spectral differentiation matrix in barycentric form, and the
tensor-product Laplacian for an affinely mapped rectangular element.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GllBasis",
    "gll_nodes",
    "gll_weights",
    "diff_matrix",
    "gll_basis",
    "element_laplacian",
]

_NEWTON_TOL = 1e-15
_NEWTON_MAX_ITER = 100


def _legendre_vandermonde(x, n):
    """Columns P_0(x) .. P_{n-1}(x) of the Legendre Vandermonde matrix."""
    V = np.empty((x.size, n))
    V[:, 0] = 1.0
    if n > 1:
        V[:, 1] = x
    for m in range(2, n):
        V[:, m] = ((2 * m - 1) * x * V[:, m - 1] - (m - 1) * V[:, m - 2]) / m
    return V


def gll_nodes(n: int) -> np.ndarray:
    """Return the n Gauss-Lobatto-Legendre nodes on [-1, 1], ascending.

    The interior nodes are the roots of P'_{n-1}; together with the
    endpoints they are computed by Newton iteration on the equivalent
    root problem x*P_{n-1}(x) - P_{n-2}(x) = 0, started from the
    Chebyshev-Gauss-Lobatto points.
    """
    if n < 2:
        raise ValueError(f"need at least two nodes, got n={n}")
    if n == 2:
        return np.array([-1.0, 1.0])
    x = -np.cos(np.pi * np.arange(n) / (n - 1))
    for _ in range(_NEWTON_MAX_ITER):
        V = _legendre_vandermonde(x, n)
        dx = -(x * V[:, n - 1] - V[:, n - 2]) / (n * V[:, n - 1])
        x += dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break
    # enforce the exact symmetry of the node set
    x = 0.5 * (x - x[::-1])
    x[0] = -1.0
    x[-1] = 1.0
    return x


def gll_weights(nodes: np.ndarray) -> np.ndarray:
    """Quadrature weights w_i = 2 / (n(n-1) P_{n-1}(x_i)^2) for GLL nodes."""
    n = nodes.size
    if n < 2:
        raise ValueError("need at least two nodes")
    V = _legendre_vandermonde(nodes, n)
    w = 2.0 / (n * (n - 1) * V[:, n - 1] ** 2)
    return 0.5 * (w + w[::-1])


def diff_matrix(nodes: np.ndarray) -> np.ndarray:
    """First-derivative collocation matrix for the given nodes.

    Built from barycentric weights; the diagonal uses the negative-sum
    trick so that every row sums to zero exactly and constants are
    differentiated to zero.
    """
    x = np.asarray(nodes, dtype=float)
    n = x.size
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    w = 1.0 / np.prod(dx, axis=1)
    w /= np.max(np.abs(w))
    D = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


@dataclass(frozen=True)
class GllBasis:
    """Nodes, weights and differentiation matrix for one element direction."""

    n: int
    nodes: np.ndarray
    weights: np.ndarray
    diff: np.ndarray


def gll_basis(n: int) -> GllBasis:
    """Build the order-(n-1) GLL basis with n collocation points."""
    nodes = gll_nodes(n)
    weights = gll_weights(nodes)
    D = diff_matrix(nodes)
    for arr in (nodes, weights, D):
        arr.flags.writeable = False
    return GllBasis(n=n, nodes=nodes, weights=weights, diff=D)


def element_laplacian(basis: GllBasis, hx: float, hy: float) -> np.ndarray:
    """Collocated Laplacian on an hx-by-hy rectangle, x-fastest node order.

    The affine map to the reference square contributes the factors
    (2/hx)^2 and (2/hy)^2 in front of the one-dimensional second
    derivative in each direction.
    """
    if hx <= 0 or hy <= 0:
        raise ValueError(f"element sides must be positive, got hx={hx}, hy={hy}")
    D2 = basis.diff @ basis.diff
    eye = np.eye(basis.n)
    return (2.0 / hx) ** 2 * np.kron(eye, D2) + (2.0 / hy) ** 2 * np.kron(D2, eye)
