"""rsclab: redundant subspace correction solvers on simulated faulty ranks.

Overlapping Schwarz building blocks, resilient two-pass variants over paired
ranks, a flexible GMRES outer solver, a fault-injection simulator, and dense
oracles that verify the convergence theory at desk scale.
"""

from .analysis import Theorem2Report, XZReport, verify_theorem2, xz_constant, xz_report
from .faultsim import (
    FaultEvent,
    FaultSchedule,
    FaultSimulator,
    Phase,
    RankState,
    load_schedule,
    validate_schedule,
)
from .krylov import SolveReport, SolverConfig, fgmres, stationary_solve
from .linalg import (
    NotSpdError,
    SingularBlockError,
    SparseMatrix,
    a_inner,
    a_norm,
    dense_lu_solve,
    inner,
    jacobi_eigh,
    operator_a_norm,
    spmv,
)
from .partition import (
    OverlapPartition,
    build_overlap_partition,
    color_subdomains,
    grow_overlap,
    partition_indices,
)
from .problems import ProblemSpec, SparseSystem, build_poisson, build_problem, load_matrix_market
from .redundancy import (
    PairFailureError,
    PairingMap,
    RedundantLayout,
    ResilientOperator,
    StaleRedundantDataError,
    build_pairing,
    recover_residual,
    sync_redundant,
)
from .schwarz import SchwarzOperator, assemble_propagation
from .subspace import SubspaceSolver, apply_correction, build_solver, prolong, restrict

__version__ = "0.1.0"

__all__ = [
    "FaultEvent",
    "FaultSchedule",
    "FaultSimulator",
    "NotSpdError",
    "OverlapPartition",
    "PairFailureError",
    "PairingMap",
    "Phase",
    "ProblemSpec",
    "RankState",
    "RedundantLayout",
    "ResilientOperator",
    "SchwarzOperator",
    "SingularBlockError",
    "SolveReport",
    "SolverConfig",
    "SparseMatrix",
    "SparseSystem",
    "StaleRedundantDataError",
    "SubspaceSolver",
    "Theorem2Report",
    "XZReport",
    "a_inner",
    "a_norm",
    "apply_correction",
    "assemble_propagation",
    "build_overlap_partition",
    "build_pairing",
    "build_poisson",
    "build_problem",
    "build_solver",
    "color_subdomains",
    "dense_lu_solve",
    "fgmres",
    "grow_overlap",
    "inner",
    "jacobi_eigh",
    "load_matrix_market",
    "load_schedule",
    "operator_a_norm",
    "partition_indices",
    "prolong",
    "recover_residual",
    "restrict",
    "spmv",
    "stationary_solve",
    "sync_redundant",
    "validate_schedule",
    "verify_theorem2",
    "xz_constant",
    "xz_report",
]
