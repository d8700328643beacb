"""Dense brute-force verification of the convergence theory.

`xz_constant` evaluates the sharp contraction constant of a successive sweep
directly from its definition: the quadratic form over all stacked subspace
decompositions is assembled explicitly, the inner minimization is eliminated
as a constrained least-squares (Schur complement onto the constraint that
the pieces sum to the given vector), and the outer supremum becomes a
generalized symmetric eigenproblem.  The squared operator norm of the sweep
must then equal 1 - 1/C.

Everything here is built from dense kernels in `linalg` only, so agreement
with the iterative operators is a genuine cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .linalg import NotSpdError, SparseMatrix, dense_cholesky, jacobi_eigh, operator_a_norm
from .partition import OverlapPartition
from .redundancy import PairingMap, ResilientOperator, SRSC
from .schwarz import SSC, SchwarzOperator, assemble_propagation
from .subspace import EXACT, SCALED_IDENTITY, SubspaceSolver, build_solver

XZ_MAX_N = 32
XZ_MAX_STACKED = 128


@dataclass
class XZReport:
    constant: float
    contraction_sq: float
    identity_gap: float


@dataclass
class Theorem2Report:
    norm_resilient: float
    norm_baseline: float
    norm_baseline_tilde: float | None
    failed_rank: int | None
    satisfied: bool
    slack: float


def _dense_local_solver(solver: SubspaceSolver, A_local: np.ndarray) -> np.ndarray:
    """Dense S_i rebuilt from the solver's specification, independent of the
    runtime solve path."""
    d = A_local.shape[0]
    if solver.kind == EXACT:
        return np.linalg.solve(A_local, np.eye(d))
    if solver.kind == SCALED_IDENTITY:
        return solver.alpha * np.eye(d)
    raise ValueError(
        "zero solvers violate the contraction hypothesis and have no sharp constant"
    )


def xz_constant(A: SparseMatrix, subspaces, solvers) -> float:
    """Sharp constant C for the successive sweep over `subspaces` (listed in
    sweep order) with the given local solvers.

    Requires every local solver to be a convergent approximation of the
    local inverse; a non-SPD symmetrized local iteration is reported as a
    hypothesis violation, and subspaces that fail to span the solution space
    are reported as an infeasible decomposition.
    """
    n = A.n_rows
    if n > XZ_MAX_N:
        raise ValueError(f"problem size {n} exceeds the oracle limit {XZ_MAX_N}")
    index_sets = [np.asarray(s, dtype=np.int64) for s in subspaces]
    dims = [idx.shape[0] for idx in index_sets]
    total = int(sum(dims))
    if total > XZ_MAX_STACKED:
        raise ValueError(f"stacked dimension {total} exceeds the limit {XZ_MAX_STACKED}")
    if len(solvers) != len(index_sets):
        raise ValueError("need one solver per subspace")

    Ad = A.toarray()
    offsets = np.concatenate([[0], np.cumsum(dims)]).astype(int)

    S_loc = []
    G_blocks = []
    for idx, solver in zip(index_sets, solvers):
        A_i = Ad[np.ix_(idx, idx)]
        S_i = _dense_local_solver(solver, A_i)
        # symmetrized local iteration: K_i = A_i (2 T_i - T_i^2) with
        # T_i = S_i A_i; written out it is explicitly symmetric
        C_i = A_i @ S_i @ A_i
        K_i = 2.0 * C_i - C_i @ np.linalg.solve(A_i, C_i)
        K_i = 0.5 * (K_i + K_i.T)
        try:
            low = dense_cholesky(K_i)
        except NotSpdError as exc:
            raise NotSpdError(
                f"subspace {solver.subdomain_id}: symmetrized iteration is not SPD, "
                "the solver violates the contraction hypothesis"
            ) from exc
        # G_i = A_i K_i^{-1} A_i gives the weighted-norm quadratic form
        G_i = A_i @ scipy.linalg.cho_solve((low, True), A_i, check_finite=False)
        G_blocks.append(0.5 * (G_i + G_i.T))
        S_loc.append(S_i)

    # stacked map from decomposition pieces to the weighted arguments:
    # block row i is [0 .. I .. S_i A(idx_i, idx_j) ..] for j > i
    L = np.zeros((total, total))
    for i, idx_i in enumerate(index_sets):
        L[offsets[i]:offsets[i + 1], offsets[i]:offsets[i + 1]] = np.eye(dims[i])
        for j in range(i + 1, len(index_sets)):
            idx_j = index_sets[j]
            L[offsets[i]:offsets[i + 1], offsets[j]:offsets[j + 1]] = (
                S_loc[i] @ Ad[np.ix_(idx_i, idx_j)]
            )
    GL = np.vstack(
        [G_blocks[i] @ L[offsets[i]:offsets[i + 1], :] for i in range(len(index_sets))]
    )
    M = L.T @ GL
    M = 0.5 * (M + M.T)

    # eliminate the inner inf: min x'Mx over E x = v has value v' (E M^-1 E')^-1 v
    E = np.zeros((n, total))
    for i, idx in enumerate(index_sets):
        E[idx, offsets[i] + np.arange(dims[i])] = 1.0
    M_low = dense_cholesky(M)
    H = E @ scipy.linalg.cho_solve((M_low, True), E.T, check_finite=False)
    H = 0.5 * (H + H.T)
    try:
        dense_cholesky(H)
    except NotSpdError as exc:
        raise ValueError("subspaces do not span the solution space") from exc

    # sup over ||v||_A = 1 of v' H^{-1} v  ==  1 / min eig of Lc' H Lc
    Lc = dense_cholesky(Ad)
    K = Lc.T @ H @ Lc
    w, _ = jacobi_eigh(0.5 * (K + K.T))
    smallest = float(w[0])
    if smallest <= 0:
        raise ValueError("degenerate constrained form; subspaces do not span")
    constant = 1.0 / smallest
    if constant < 1.0 - 1e-9:
        raise ValueError(
            f"computed constant {constant} < 1 is impossible under the hypotheses"
        )
    return constant


def xz_constant_exact_reduced(A: SparseMatrix, subspaces) -> float:
    """Independent route for exact local solvers via the reduced form
    sum_i || P_i sum_{j >= i} v_j ||_A^2 with explicit projection matrices."""
    n = A.n_rows
    if n > XZ_MAX_N:
        raise ValueError(f"problem size {n} exceeds the oracle limit {XZ_MAX_N}")
    index_sets = [np.asarray(s, dtype=np.int64) for s in subspaces]
    dims = [idx.shape[0] for idx in index_sets]
    total = int(sum(dims))
    offsets = np.concatenate([[0], np.cumsum(dims)]).astype(int)
    Ad = A.toarray()

    projections = []
    for idx in index_sets:
        A_i = Ad[np.ix_(idx, idx)]
        P = np.zeros((n, n))
        P[idx, :] = np.linalg.solve(A_i, Ad[idx, :])
        projections.append(P)

    M = np.zeros((total, total))
    for i, P in enumerate(projections):
        J = np.zeros((n, total))
        for j in range(i, len(index_sets)):
            idx_j = index_sets[j]
            J[idx_j, offsets[j] + np.arange(dims[j])] = 1.0
        W = P @ J
        M += W.T @ (Ad @ W)
    M = 0.5 * (M + M.T)

    E = np.zeros((n, total))
    for i, idx in enumerate(index_sets):
        E[idx, offsets[i] + np.arange(dims[i])] = 1.0
    M_low = dense_cholesky(M)
    H = E @ scipy.linalg.cho_solve((M_low, True), E.T, check_finite=False)
    Lc = dense_cholesky(Ad)
    K = Lc.T @ (0.5 * (H + H.T)) @ Lc
    w, _ = jacobi_eigh(0.5 * (K + K.T))
    return 1.0 / float(w[0])


def xz_report(A: SparseMatrix, partition: OverlapPartition, solvers) -> XZReport:
    """Cross-check the identity: squared sweep norm against 1 - 1/C."""
    constant = xz_constant(A, partition.overlapped, solvers)
    op = SchwarzOperator(A, partition, solvers, variant=SSC)
    contraction = operator_a_norm(A, assemble_propagation(op))
    gap = abs(contraction**2 - (1.0 - 1.0 / constant))
    return XZReport(constant=constant, contraction_sq=contraction**2, identity_gap=gap)


def verify_theorem2(
    A: SparseMatrix,
    partition: OverlapPartition,
    pairing: PairingMap,
    failed_rank: int | None = None,
    tolerance: float = 1e-10,
) -> Theorem2Report:
    """Compare the resilient sweep's contraction against the baseline sweep.

    With a failed rank the resilient norm must not exceed the baseline norm
    (up to `tolerance`); error-free it must respect the product bound from
    the two composed sweeps.
    """
    solvers = [
        build_solver(A, idx, EXACT, subdomain_id=i)
        for i, idx in enumerate(partition.overlapped)
    ]
    baseline = SchwarzOperator(A, partition, solvers, variant=SSC)
    resilient = ResilientOperator(A, partition, solvers, pairing, variant=SRSC)
    norm_baseline = operator_a_norm(A, assemble_propagation(baseline))

    if failed_rank is not None:
        alive = np.ones(pairing.n_ranks, dtype=bool)
        alive[failed_rank] = False
        norm_resilient = operator_a_norm(A, assemble_propagation(resilient, alive=alive))
        slack = norm_baseline + tolerance - norm_resilient
        return Theorem2Report(
            norm_resilient=norm_resilient,
            norm_baseline=norm_baseline,
            norm_baseline_tilde=None,
            failed_rank=failed_rank,
            satisfied=slack >= 0.0,
            slack=slack,
        )

    tilde = SchwarzOperator(
        A, partition, solvers, variant=SSC, sweep_order=resilient.buddy_sweep_order
    )
    norm_tilde = operator_a_norm(A, assemble_propagation(tilde))
    norm_resilient = operator_a_norm(A, assemble_propagation(resilient))
    bound = norm_baseline * norm_tilde
    slack = bound + tolerance - norm_resilient
    return Theorem2Report(
        norm_resilient=norm_resilient,
        norm_baseline=norm_baseline,
        norm_baseline_tilde=norm_tilde,
        failed_rank=None,
        satisfied=slack >= 0.0,
        slack=slack,
    )
