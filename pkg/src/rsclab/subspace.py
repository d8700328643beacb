"""Restriction/prolongation and the local solvers behind each subspace
correction: exact dense LU, a scaled identity (one Richardson step on the
local block), or the zero solver that skips the correction entirely."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import LUFactor, SparseMatrix, as_vector, lu_factor_checked, spmv

EXACT = "exact"
SCALED_IDENTITY = "scaled_identity"
ZERO = "zero"
SOLVER_KINDS = (EXACT, SCALED_IDENTITY, ZERO)


def restrict(v, local_indices) -> np.ndarray:
    """Pick the entries of v on the subdomain."""
    vv = np.asarray(v, dtype=np.float64)
    idx = np.asarray(local_indices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= vv.shape[0]):
        raise IndexError("restriction index out of range")
    return vv[idx]


def prolong(v_local, local_indices, n: int) -> np.ndarray:
    """Scatter local values into a zero vector of length n."""
    vl = np.asarray(v_local, dtype=np.float64)
    idx = np.asarray(local_indices, dtype=np.int64)
    if vl.shape[0] != idx.shape[0]:
        raise ValueError("local vector and index set disagree in length")
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexError("prolongation index out of range")
    out = np.zeros(n)
    out[idx] = vl
    return out


@dataclass
class SubspaceSolver:
    """Approximate inverse of one local operator A_i = A[D, D].

    exact           solves with a dense LU of the block
    scaled_identity multiplies by alpha = 1 / ||A_i||_inf, which keeps every
                    local eigenvalue of alpha * A_i inside (0, 1]
    zero            contributes nothing (used when a rank's correction is
                    dropped altogether)
    """

    subdomain_id: int
    kind: str
    local_indices: np.ndarray
    factor: LUFactor | None = None
    alpha: float | None = None

    def __post_init__(self):
        if self.kind not in SOLVER_KINDS:
            raise ValueError(f"unknown solver kind {self.kind!r}")
        self.local_indices = np.asarray(self.local_indices, dtype=np.int64)
        if self.kind == EXACT and self.factor is None:
            raise ValueError("exact solver needs a factorization")
        if self.kind == SCALED_IDENTITY and not (self.alpha and self.alpha > 0):
            raise ValueError("scaled_identity solver needs a positive alpha")
        if self.kind == ZERO and (self.factor is not None or self.alpha is not None):
            raise ValueError("zero solver carries no data")

    @property
    def dim(self) -> int:
        return int(self.local_indices.shape[0])

    def solve_local(self, r_local: np.ndarray) -> np.ndarray:
        if self.kind == EXACT:
            return self.factor.solve(r_local)
        if self.kind == SCALED_IDENTITY:
            return self.alpha * r_local
        return np.zeros_like(r_local)


def local_inf_norm(A: SparseMatrix, local_indices) -> float:
    block = A.scipy[np.asarray(local_indices, dtype=np.int64)][:, np.asarray(local_indices, dtype=np.int64)]
    return float(np.abs(block).sum(axis=1).max())


def build_solver(A: SparseMatrix, local_indices, kind: str, subdomain_id: int = 0) -> SubspaceSolver:
    idx = np.asarray(local_indices, dtype=np.int64)
    if kind in (EXACT, SCALED_IDENTITY) and idx.size == 0:
        raise ValueError(f"{kind} solver needs a nonempty index set")
    if kind == EXACT:
        return SubspaceSolver(
            subdomain_id=subdomain_id,
            kind=EXACT,
            local_indices=idx,
            factor=lu_factor_checked(A.submatrix_dense(idx)),
        )
    if kind == SCALED_IDENTITY:
        return SubspaceSolver(
            subdomain_id=subdomain_id,
            kind=SCALED_IDENTITY,
            local_indices=idx,
            alpha=1.0 / local_inf_norm(A, idx),
        )
    return SubspaceSolver(subdomain_id=subdomain_id, kind=ZERO, local_indices=idx)


def apply_correction(v, f, A: SparseMatrix, solver: SubspaceSolver) -> np.ndarray:
    """One subspace correction v + prolong(S_i restrict(f - A v)).

    Only the entries on the solver's index set change.
    """
    vv = as_vector(v, A.n_cols)
    fv = as_vector(f, A.n_rows)
    r = fv - spmv(A, vv)
    idx = solver.local_indices
    out = vv.copy()
    out[idx] += solver.solve_local(r[idx])
    return out
