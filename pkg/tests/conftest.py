"""Shared fixtures: solver contexts on the small reference grids.

Contexts are session scoped because assembly dominates test runtime;
tests must not mutate them.
"""

import numpy as np
import pytest

from smpm_schur.driver import build_solver_context
from smpm_schur.mesh import domain_boundary_nodes


@pytest.fixture(scope="session")
def ctx522():
    return build_solver_context(5, 2, 2, want_dense_schur=True)


@pytest.fixture(scope="session")
def ctx544():
    return build_solver_context(5, 4, 4, want_dense_schur=True)


@pytest.fixture(scope="session")
def ctx733():
    return build_solver_context(7, 3, 3, want_dense_schur=True)


def quadratic_neumann_problem(mesh):
    """Exact polynomial test case u = x^2 + y^2, lap(u) = 4.

    The Neumann data n.grad(u) is accumulated face by face so that grid
    corners on the domain boundary carry the sum of both incident faces,
    matching how the boundary penalty rows are assembled.
    """
    x = mesh.coords[:, 0]
    y = mesh.coords[:, 1]
    u = x**2 + y**2
    f = np.full(mesh.r, 4.0)
    g = np.zeros(mesh.r)
    tol = 1e-12 * max(mesh.Lx, mesh.Ly)
    on_left = np.abs(x) < tol
    on_right = np.abs(x - mesh.Lx) < tol
    on_bottom = np.abs(y) < tol
    on_top = np.abs(y - mesh.Ly) < tol
    g[on_left] += -2.0 * x[on_left]
    g[on_right] += 2.0 * x[on_right]
    g[on_bottom] += -2.0 * y[on_bottom]
    g[on_top] += 2.0 * y[on_top]
    assert set(np.nonzero(on_left | on_right | on_bottom | on_top)[0]) == set(
        domain_boundary_nodes(mesh)
    )
    return f, g, u
