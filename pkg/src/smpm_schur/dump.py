"""Matrix Market dumps of the assembled operators for external inspection."""

from pathlib import Path

import numpy as np
import scipy.io as sio
import scipy.sparse as sp

from .assembly import SmpmOperators, sparse_L
from .schur import SchurContext

__all__ = ["dump_matrices"]


def dump_matrices(directory, ops: SmpmOperators, schur: SchurContext | None = None):
    """Write A, B, L and, when given, S, M, Z, C to <directory>/<name>.mtx.

    Everything is written in sparse coordinate form except the dense
    coarse matrix C. Returns the list of written paths.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    A = sp.block_diag(
        [ops.a_blocks[e] for e in range(ops.mesh.n_elements)], format="csr"
    )
    targets = {"A": A, "B": ops.B, "L": sparse_L(ops)}
    if schur is not None:
        targets["S"] = schur.S
        targets["M"] = _preconditioner_matrix(schur)
        targets["Z"] = schur.Z
        targets["C"] = schur.C
    written = []
    for name, matrix in targets.items():
        path = directory / f"{name}.mtx"
        sio.mmwrite(path, matrix)
        written.append(path)
    return written


def _preconditioner_matrix(schur: SchurContext) -> sp.csr_matrix:
    """Reassemble the block-Jacobi matrix M from its blocks of S."""
    k = schur.k
    rows, cols, vals = [], [], []
    csr = schur.S.tocsr()
    for blk in schur.blocks:
        sub = csr[blk.slots][:, blk.slots].toarray()
        grid_r, grid_c = np.meshgrid(blk.slots, blk.slots, indexing="ij")
        rows.append(grid_r.ravel())
        cols.append(grid_c.ravel())
        vals.append(sub.ravel())
    if rows:
        return sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(k, k),
        ).tocsr()
    return sp.csr_matrix((k, k))
