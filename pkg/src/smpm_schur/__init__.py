"""Spectral multidomain Poisson-Neumann solver on the interface Schur complement.

A penalized high-order collocation discretization of the pure-Neumann
Poisson problem on rectangular multidomain grids, solved by GMRES on the
interface trace system with optional block-Jacobi preconditioning and
coarse deflation.
"""

from .assembly import (
    AssemblyError,
    SmpmOperators,
    apply_A,
    apply_L,
    build_operators,
    build_rhs,
    dense_L,
    penalty_default,
    solve_A,
    sparse_L,
)
from .driver import (
    MODES,
    Solution,
    SolverContext,
    SolverReport,
    build_solver_context,
    recover_interior,
    solve,
)
from .experiments import (
    CSV_COLUMNS,
    StudySpec,
    analytic_error,
    dense_oracle,
    manufactured_problem,
    run_study,
    write_csv,
)
from .gll import GllBasis, diff_matrix, element_laplacian, gll_basis, gll_nodes, gll_weights
from .krylov import GmresOptions, SolveStats, gmres
from .mesh import (
    InterfacePair,
    InterfaceSet,
    Mesh,
    build_mesh,
    enumerate_interfaces,
    include_gamma,
    restrict_gamma,
)
from .nullspace import (
    NullSpaceError,
    left_null_vector,
    left_null_vector_sparse,
    project_out,
)
from .schur import (
    CoarseSolver,
    DenseCapError,
    PreconditionerError,
    SchurContext,
    apply_schur,
    assemble_schur,
    assemble_schur_sparse,
    build_block_jacobi,
    build_deflation,
    build_schur_context,
    coarse_solve,
)

__version__ = "0.1.0"
