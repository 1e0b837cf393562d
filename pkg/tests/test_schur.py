"""Trace system assembly, deflation projectors and block preconditioner."""

import numpy as np
import pytest
import scipy.linalg as sla

from smpm_schur.assembly import build_operators
from smpm_schur.mesh import build_mesh
from smpm_schur.nullspace import NullSpaceError
from smpm_schur.schur import (
    CoarseSolver,
    DenseCapError,
    apply_block_jacobi_inv,
    apply_schur,
    assemble_schur,
    build_deflation,
    build_schur_context,
    coarse_solve,
)

# slot counts of the checkerboard blocks, one entry per coloured element
BLOCK_SIZES = {
    (5, 2, 2): [18, 18],
    (5, 4, 4): [18, 18, 26, 26, 26, 26, 32, 32],
    (7, 3, 3): [26, 26, 26, 26, 48],
}


@pytest.fixture(params=["ctx522", "ctx544", "ctx733"])
def ctx(request):
    return request.getfixturevalue(request.param)


def test_matrix_free_product_matches_assembled_matrix(ctx):
    rng = np.random.default_rng(1)
    v = rng.standard_normal(ctx.k)
    np.testing.assert_allclose(
        apply_schur(ctx.ops, v), ctx.schur.S_dense @ v, atol=1e-9
    )
    with pytest.raises(ValueError):
        apply_schur(ctx.ops, np.zeros(ctx.k + 1))


def test_assembled_matrix_columns_match_definition(ctx):
    S = ctx.schur.S_dense
    for j in [0, ctx.k // 2, ctx.k - 1]:
        e = np.zeros(ctx.k)
        e[j] = 1.0
        np.testing.assert_allclose(S[:, j], apply_schur(ctx.ops, e), atol=1e-9)


def test_constants_lie_in_the_right_null_space(ctx):
    sch = ctx.schur
    scale = np.linalg.norm(sch.S_dense)
    assert np.linalg.norm(sch.S @ np.ones(ctx.k)) <= 1e-10 * scale
    assert np.linalg.norm(sch.C @ np.ones(ctx.d)) <= 1e-10 * scale


def test_left_null_vectors_annihilate_their_operators(ctx):
    sch = ctx.schur
    assert np.linalg.norm(sch.u_S) == pytest.approx(1.0)
    assert np.linalg.norm(sch.u_C) == pytest.approx(1.0)
    assert np.linalg.norm(sch.S.T @ sch.u_S) <= 1e-10 * np.linalg.norm(sch.S_dense)
    assert np.linalg.norm(sch.C.T @ sch.u_C) <= 1e-10 * np.linalg.norm(sch.C)


def test_deflation_basis_partitions_the_trace(ctx):
    Z = build_deflation(ctx.ops.interfaces)
    assert Z.shape == (ctx.k, ctx.d)
    dense = Z.toarray()
    # each slot belongs to exactly one column, and column p covers pair p
    np.testing.assert_array_equal(dense.sum(axis=1), np.ones(ctx.k))
    for pair in ctx.ops.interfaces.pairs:
        col = dense[:, pair.index]
        np.testing.assert_array_equal(np.nonzero(col)[0], np.sort(pair.slots))


def test_coarse_matrix_is_the_projected_schur_complement(ctx):
    sch = ctx.schur
    Z = sch.Z.toarray()
    np.testing.assert_allclose(sch.C, Z.T @ sch.S_dense @ Z, atol=1e-9)


def test_blocks_partition_and_restrict_the_schur_matrix(ctx):
    sch = ctx.schur
    mesh = ctx.mesh
    covered = np.sort(np.concatenate([b.slots for b in sch.blocks]))
    np.testing.assert_array_equal(covered, np.arange(ctx.k))
    assert sorted(b.slots.size for b in sch.blocks) == BLOCK_SIZES[
        (mesh.n, mesh.mx, mesh.my)
    ]
    for blk in sch.blocks:
        ix, iy = mesh.element_index(blk.element)
        assert (ix + iy) % 2 == 0
        sub = sch.S_dense[np.ix_(blk.slots, blk.slots)]
        rng = np.random.default_rng(blk.element)
        v = rng.standard_normal(blk.slots.size)
        np.testing.assert_allclose(sla.lu_solve(blk.lu, sub @ v), v, atol=1e-8)


def test_every_pair_touches_exactly_one_block(ctx):
    slot_sets = [set(b.slots.tolist()) for b in ctx.schur.blocks]
    for pair in ctx.ops.interfaces.pairs:
        hits = [i for i, s in enumerate(slot_sets) if set(pair.slots.tolist()) <= s]
        assert len(hits) == 1


def test_block_preconditioner_inverts_its_own_matrix(ctx):
    sch = ctx.schur
    M = np.zeros((ctx.k, ctx.k))
    for blk in sch.blocks:
        M[np.ix_(blk.slots, blk.slots)] = sch.S_dense[np.ix_(blk.slots, blk.slots)]
    rng = np.random.default_rng(17)
    v = rng.standard_normal(ctx.k)
    np.testing.assert_allclose(apply_block_jacobi_inv(sch.blocks, M @ v), v, atol=1e-8)
    np.testing.assert_allclose(M @ sch.apply_Minv(v), v, atol=1e-8)


def test_projectors_are_idempotent_and_intertwine(ctx):
    sch = ctx.schur
    rng = np.random.default_rng(23)
    scale = np.linalg.norm(sch.S_dense)
    for _ in range(10):
        v = rng.standard_normal(ctx.k)
        nv = np.linalg.norm(v)
        assert (
            np.linalg.norm(sch.apply_P(sch.apply_P(v)) - sch.apply_P(v))
            <= 1e-9 * nv * scale
        )
        assert (
            np.linalg.norm(sch.apply_Q(sch.apply_Q(v)) - sch.apply_Q(v))
            <= 1e-9 * nv * scale
        )
        assert (
            np.linalg.norm(sch.apply_P(sch.S @ v) - sch.S @ sch.apply_Q(v))
            <= 1e-9 * nv * scale
        )


def test_coarse_solver_agrees_with_single_shot_helper(ctx):
    sch = ctx.schur
    rng = np.random.default_rng(29)
    w = rng.standard_normal(ctx.d)
    y = sch.coarse.solve(w)
    np.testing.assert_allclose(y, coarse_solve(sch.C, sch.u_C, w), atol=1e-10)
    # the result solves the coarse system on the solvable component
    wp = w - sch.u_C * (sch.u_C @ w)
    np.testing.assert_allclose(sch.C @ y, wp, atol=1e-8 * np.linalg.norm(sch.C))


def test_coarse_solver_rejects_wrong_rank():
    with pytest.raises(NullSpaceError):
        CoarseSolver(np.eye(3))  # not rank deficient
    with pytest.raises(NullSpaceError):
        CoarseSolver(np.diag([1.0, 0.0, 0.0]))  # deficiency above one
    empty = CoarseSolver(np.zeros((0, 0)))
    assert empty.solve(np.zeros(0)).size == 0


def test_dense_assembly_respects_the_cap(ctx522):
    with pytest.raises(DenseCapError):
        assemble_schur(ctx522.ops, cap=10)
    np.testing.assert_allclose(assemble_schur(ctx522.ops), ctx522.schur.S_dense, atol=0)


def test_single_element_grid_has_empty_trace_machinery():
    sch = build_schur_context(build_operators(build_mesh(5, 1, 1)))
    assert sch.k == 0 and sch.d == 0
    assert sch.S.shape == (0, 0)
    assert not sch.blocks
    assert sch.u_S.size == 0
