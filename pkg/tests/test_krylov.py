"""GMRES behaviour on small dense operators with known answers."""

import numpy as np
import pytest

from smpm_schur.krylov import GmresOptions, SolveStats, gmres


def apply_matrix(A):
    return lambda v: A @ v


def test_options_validation():
    with pytest.raises(ValueError):
        GmresOptions(rel_tol=0.0)
    with pytest.raises(ValueError):
        GmresOptions(max_iter=-1)
    with pytest.raises(ValueError):
        GmresOptions(restart=0)


def test_zero_right_hand_side_returns_zero_without_work():
    calls = []

    def op(v):
        calls.append(1)
        return v

    x, stats = gmres(op, np.zeros(4))
    np.testing.assert_array_equal(x, np.zeros(4))
    assert stats.iterations == 0 and stats.converged and not calls


def test_identity_converges_in_one_iteration():
    b = np.array([3.0, -1.0, 2.0])
    x, stats = gmres(apply_matrix(np.eye(3)), b)
    np.testing.assert_allclose(x, b, atol=1e-12)
    assert stats.iterations == 1 and stats.converged


def test_diagonal_system_matches_direct_solve():
    d = np.array([1.0, 2.0, 5.0, 10.0])
    b = np.array([1.0, 1.0, 1.0, 1.0])
    x, stats = gmres(apply_matrix(np.diag(d)), b, GmresOptions(rel_tol=1e-12))
    np.testing.assert_allclose(x, b / d, atol=1e-11)
    assert stats.converged
    # a diagonal with q distinct eigenvalues is solved in q iterations
    assert stats.iterations == 4


def test_general_system_and_residual_history():
    rng = np.random.default_rng(2)
    A = np.eye(30) + 0.1 * rng.standard_normal((30, 30))
    b = rng.standard_normal(30)
    opts = GmresOptions(rel_tol=1e-12)
    x, stats = gmres(apply_matrix(A), b, opts)
    assert stats.converged
    np.testing.assert_allclose(x, np.linalg.solve(A, b), atol=1e-9)
    # the estimates are monotone within the single cycle and track the tolerance
    assert stats.residuals.size == stats.iterations
    assert np.all(np.diff(stats.residuals) <= 1e-15)
    assert stats.residuals[-1] <= opts.rel_tol
    true_rel = np.linalg.norm(b - A @ x) / np.linalg.norm(b)
    assert true_rel <= 10 * opts.rel_tol


def test_restarted_run_still_converges():
    rng = np.random.default_rng(4)
    A = np.eye(25) + 0.1 * rng.standard_normal((25, 25))
    b = rng.standard_normal(25)
    opts = GmresOptions(rel_tol=1e-10, restart=6, max_iter=400)
    x, stats = gmres(apply_matrix(A), b, opts)
    assert stats.converged
    # restart cycles may repeat counts, but each cycle makes progress
    assert stats.iterations > 6
    np.testing.assert_allclose(x, np.linalg.solve(A, b), atol=1e-7)


def test_iteration_cap_reports_no_convergence():
    rng = np.random.default_rng(6)
    A = np.eye(40) + 0.5 * rng.standard_normal((40, 40))
    b = rng.standard_normal(40)
    x, stats = gmres(apply_matrix(A), b, GmresOptions(rel_tol=1e-14, max_iter=3))
    assert stats.iterations == 3
    assert not stats.converged
    # the partial iterate still reduces the residual
    assert np.linalg.norm(b - A @ x) < np.linalg.norm(b)


def test_breakdown_on_consistent_singular_system():
    A = np.diag([1.0, 0.0])
    b = np.array([1.0, 0.0])
    x, stats = gmres(apply_matrix(A), b)
    assert stats.converged
    np.testing.assert_allclose(x, [1.0, 0.0], atol=1e-12)
    assert isinstance(stats, SolveStats)


def test_breakdown_on_inconsistent_singular_system():
    A = np.diag([1.0, 0.0])
    b = np.array([0.0, 1.0])
    x, stats = gmres(apply_matrix(A), b)
    assert not stats.converged
    np.testing.assert_array_equal(x, np.zeros(2))


def test_stagnating_operator_terminates_via_breakdown():
    # A r0 lies in span{r0}: the Krylov space is one-dimensional and the
    # run must stop after one step with the exact solution
    A = np.diag([2.0, 3.0])
    b = np.array([1.0, 0.0])
    x, stats = gmres(apply_matrix(A), b, GmresOptions(rel_tol=1e-13))
    assert stats.iterations == 1
    assert stats.converged
    np.testing.assert_allclose(x, [0.5, 0.0], atol=1e-13)
