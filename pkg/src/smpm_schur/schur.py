"""Schur complement of the trace system, deflation and preconditioning.

Eliminating the element interiors from the penalized operator leaves a
system on the interface slots only,

    S x = b_S,   S = I + B A^{-1} E,

whose solution x is the trace B u of the full solution. S is assembled
in sparse form by solving, per element, for the columns of A^{-1} E that
touch that element.

Two convergence aids operate on S: a coarse deflation space Z with one
indicator column per interface pair (C = Z^T S Z, projectors
P = I - S Z C^+ Z^T and Q = I - Z C^+ Z^T S), and a block-Jacobi
preconditioner whose blocks gather all slots incident to every second
element in a checkerboard colouring, so each block couples at most four
interface pairs.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .assembly import SmpmOperators, solve_A
from .mesh import InterfaceSet, include_gamma
from .nullspace import (
    NullSpaceError,
    left_null_vector,
    left_null_vector_sparse,
    project_out,
)

__all__ = [
    "DenseCapError",
    "PreconditionerError",
    "JacobiBlock",
    "CoarseSolver",
    "SchurContext",
    "apply_schur",
    "assemble_schur_sparse",
    "assemble_schur",
    "build_deflation",
    "build_block_jacobi",
    "apply_block_jacobi_inv",
    "coarse_solve",
    "build_schur_context",
]

DENSE_CAP = 20000
SVD_CUTOFF = 1e-10


class DenseCapError(RuntimeError):
    """Raised when a dense materialization would exceed the size cap."""


class PreconditionerError(RuntimeError):
    """Raised when a preconditioner block cannot be factorized."""


def apply_schur(ops: SmpmOperators, v: np.ndarray) -> np.ndarray:
    """Matrix-free product S v = v + B A^{-1} E v."""
    v = np.asarray(v, dtype=float)
    if v.shape != (ops.interfaces.k,):
        raise ValueError(f"expected shape ({ops.interfaces.k},), got {v.shape}")
    w = include_gamma(ops.interfaces, v)
    return v + ops.B @ solve_A(ops, w)


def assemble_schur_sparse(ops: SmpmOperators) -> sp.csr_matrix:
    """Assemble S = I + B A^{-1} E as a sparse matrix.

    A^{-1} E is block sparse: the slots of one element only excite that
    element's interior, so each element contributes an n^2-by-(number of
    its slots) dense solve.
    """
    iset = ops.interfaces
    n2 = ops.mesh.n * ops.mesh.n
    k = iset.k
    if k == 0:
        return sp.csr_matrix((0, 0))
    slot_elem = iset.gamma_to_global // n2
    order = np.argsort(slot_elem, kind="stable")
    rows, cols, vals = [], [], []
    start = 0
    while start < k:
        eid = slot_elem[order[start]]
        stop = start
        while stop < k and slot_elem[order[stop]] == eid:
            stop += 1
        slots = order[start:stop]
        locals_ = iset.gamma_to_global[slots] - eid * n2
        rhs = np.zeros((n2, slots.size))
        rhs[locals_, np.arange(slots.size)] = 1.0
        X = sla.lu_solve(ops.a_lu[eid], rhs, check_finite=False)
        rows.append(np.repeat(eid * n2 + np.arange(n2), slots.size))
        cols.append(np.tile(slots, n2))
        vals.append(X.ravel())
        start = stop
    Ainv_E = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(ops.mesh.r, k),
    ).tocsc()
    S = sp.eye(k, format="csr") + ops.B @ Ainv_E
    return S.tocsr()


def assemble_schur(ops: SmpmOperators, cap: int = DENSE_CAP) -> np.ndarray:
    """Dense S for diagnostics and small-grid verification."""
    k = ops.interfaces.k
    if k > cap:
        raise DenseCapError(f"trace dimension {k} exceeds dense cap {cap}")
    return assemble_schur_sparse(ops).toarray()


def build_deflation(interfaces: InterfaceSet) -> sp.csr_matrix:
    """Indicator deflation basis Z of shape (k, d), one column per pair.

    The pair slot lists partition the trace space, so the columns of Z
    are disjoint and sum to the constant vector.
    """
    k, d = interfaces.k, interfaces.d
    rows = np.concatenate([p.slots for p in interfaces.pairs]) if d else np.empty(0, dtype=int)
    cols = (
        np.concatenate([np.full(p.slots.size, p.index) for p in interfaces.pairs])
        if d
        else np.empty(0, dtype=int)
    )
    return sp.coo_matrix((np.ones(rows.size), (rows, cols)), shape=(k, d)).tocsr()


@dataclass
class JacobiBlock:
    """One preconditioner block: the slots incident to a coloured element."""

    element: int
    slots: np.ndarray
    lu: tuple


def build_block_jacobi(
    S: sp.csr_matrix, ops: SmpmOperators
) -> list[JacobiBlock]:
    """Checkerboard block-Jacobi blocks of S.

    Elements with even ix+iy are coloured; every interface pair has
    exactly one coloured endpoint, which owns its slots. The block of a
    coloured element is the principal submatrix of S on all slots of its
    incident pairs (at most 8n of them).
    """
    mesh = ops.mesh
    owned: dict[int, list[np.ndarray]] = {}
    for pair in ops.interfaces.pairs:
        lo_xy = mesh.element_index(pair.elem_lo)
        owner = pair.elem_lo if (lo_xy[0] + lo_xy[1]) % 2 == 0 else pair.elem_hi
        owned.setdefault(owner, []).append(pair.slots)
    csr = S.tocsr()
    blocks = []
    for eid in sorted(owned):
        slots = np.sort(np.concatenate(owned[eid]))
        sub = csr[slots][:, slots].toarray()
        lu, piv = sla.lu_factor(sub, check_finite=False)
        if not np.all(np.isfinite(lu)) or np.min(np.abs(np.diag(lu))) == 0.0:
            raise PreconditionerError(f"singular preconditioner block at element {eid}")
        blocks.append(JacobiBlock(element=eid, slots=slots, lu=(lu, piv)))
    return blocks


def apply_block_jacobi_inv(blocks: list[JacobiBlock], v: np.ndarray) -> np.ndarray:
    """Apply M^{-1} blockwise; the block slot sets partition the trace."""
    out = np.empty_like(np.asarray(v, dtype=float))
    for blk in blocks:
        out[blk.slots] = sla.lu_solve(blk.lu, v[blk.slots], check_finite=False)
    return out


def coarse_solve(
    C: np.ndarray,
    u_C: np.ndarray | None,
    w: np.ndarray,
    rel_cutoff: float = SVD_CUTOFF,
) -> np.ndarray:
    """Minimum-norm solution of C y = (w - u_C u_C^T w) via SVD pseudo-inverse."""
    C = np.asarray(C, dtype=float)
    wp = np.asarray(w, dtype=float)
    if u_C is not None:
        wp = project_out(wp, u_C)
    if C.size == 0:
        return np.zeros(0)
    U, s, Vt = np.linalg.svd(C)
    keep = s > rel_cutoff * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    sinv = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    return Vt.T @ (sinv * (U.T @ wp))


class CoarseSolver:
    """Cached SVD pseudo-inverse of the coarse matrix C = Z^T S Z.

    C inherits the rank deficiency of S; right-hand sides are projected
    off the left null vector u_C before the pseudo-inverse is applied.
    """

    def __init__(self, C: np.ndarray, rel_cutoff: float = SVD_CUTOFF):
        self.C = np.asarray(C, dtype=float)
        d = self.C.shape[0]
        if d == 0:
            self.u_C = np.zeros(0)
            self._U = self._Vt = np.zeros((0, 0))
            self._sinv = np.zeros(0)
            return
        U, s, Vt = np.linalg.svd(self.C)
        fro = float(np.sqrt(np.sum(s * s)))
        if d >= 2 and fro > 0 and s[-2] <= 1e-8 * fro:
            raise NullSpaceError("coarse matrix rank deficiency exceeds one")
        self.u_C = _coarse_null_vector(U, s, fro)
        keep = s > rel_cutoff * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
        self._U, self._Vt = U, Vt
        self._sinv = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)

    def solve(self, w: np.ndarray) -> np.ndarray:
        if self.C.shape[0] == 0:
            return np.zeros(0)
        wp = project_out(np.asarray(w, dtype=float), self.u_C)
        return self._Vt.T @ (self._sinv * (self._U.T @ wp))


def _coarse_null_vector(U, s, fro):
    if fro == 0.0 or s[-1] <= 1e-8 * fro:
        u = U[:, -1]
        i = int(np.argmax(np.abs(u)))
        return -u if u[i] < 0 else u
    raise NullSpaceError(
        f"coarse matrix is not rank deficient: smallest singular value {s[-1]:.3e}"
    )


@dataclass
class SchurContext:
    """Everything needed to run the trace solves for one operator set."""

    ops: SmpmOperators
    S: sp.csr_matrix
    Z: sp.csr_matrix
    blocks: list[JacobiBlock]
    coarse: CoarseSolver
    u_S: np.ndarray
    S_dense: np.ndarray | None = field(default=None, repr=False)

    @property
    def k(self) -> int:
        return self.ops.interfaces.k

    @property
    def d(self) -> int:
        return self.ops.interfaces.d

    @property
    def C(self) -> np.ndarray:
        return self.coarse.C

    @property
    def u_C(self) -> np.ndarray:
        return self.coarse.u_C

    def apply_S(self, v: np.ndarray) -> np.ndarray:
        return self.S @ v

    def apply_Minv(self, v: np.ndarray) -> np.ndarray:
        return apply_block_jacobi_inv(self.blocks, v)

    def apply_P(self, v: np.ndarray) -> np.ndarray:
        """Left deflation projector P v = v - S Z C^+ Z^T v."""
        return v - self.S @ (self.Z @ self.coarse.solve(self.Z.T @ v))

    def apply_Q(self, v: np.ndarray) -> np.ndarray:
        """Right deflation projector Q v = v - Z C^+ Z^T S v."""
        return v - self.Z @ self.coarse.solve(self.Z.T @ (self.S @ v))


def build_schur_context(
    ops: SmpmOperators,
    dense_null_cutoff: int = 3000,
    want_dense: bool = False,
    dense_cap: int = DENSE_CAP,
) -> SchurContext:
    """Assemble S, its null vector, the deflation space and preconditioner.

    Up to ``dense_null_cutoff`` trace unknowns the left null vector of S
    comes from a dense SVD (which also verifies the rank deficiency is
    exactly one); beyond that, sparse inverse iteration is used.
    """
    S = assemble_schur_sparse(ops)
    k = ops.interfaces.k
    if k == 0:
        return SchurContext(
            ops=ops,
            S=S,
            Z=build_deflation(ops.interfaces),
            blocks=[],
            coarse=CoarseSolver(np.zeros((0, 0))),
            u_S=np.zeros(0),
        )
    if k <= dense_null_cutoff:
        u_S = left_null_vector(S.toarray())
    else:
        u_S = left_null_vector_sparse(S)
    Z = build_deflation(ops.interfaces)
    blocks = build_block_jacobi(S, ops)
    C = (Z.T @ (S @ Z)).toarray()
    coarse = CoarseSolver(C)
    S_dense = None
    if want_dense:
        if k > dense_cap:
            raise DenseCapError(f"trace dimension {k} exceeds dense cap {dense_cap}")
        S_dense = S.toarray()
    return SchurContext(
        ops=ops, S=S, Z=Z, blocks=blocks, coarse=coarse, u_S=u_S, S_dense=S_dense
    )
