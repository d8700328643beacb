"""Shared helpers: seeded random systems and the dense Krylov oracle."""

import numpy as np
import pytest

from rsclab import ProblemSpec, SparseMatrix, build_poisson, build_overlap_partition, build_solver


def random_spd(rng, n, shift=None):
    """Generic dense random SPD matrix (Wishart plus a diagonal shift)."""
    B = rng.standard_normal((n, n))
    A = B @ B.T + (shift if shift is not None else n) * np.eye(n)
    return SparseMatrix.from_dense(A)


def tridiag(n):
    """The 1-D second-difference matrix tridiag(-1, 2, -1)."""
    T = 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    return SparseMatrix.from_dense(T)


def banded_spd(rng, n, bandwidth=2):
    """Random banded, diagonally dominant SPD matrix: local coupling like a
    discretized operator, so overlap growth stays local."""
    M = np.zeros((n, n))
    for k in range(1, bandwidth + 1):
        off = rng.standard_normal(n - k) * 0.5
        M += np.diag(off, k) + np.diag(off, -k)
    M += np.diag(np.abs(M).sum(axis=1) + 0.5 + rng.random(n))
    return SparseMatrix.from_dense(M)


def exact_solvers(A, partition):
    return [
        build_solver(A, idx, "exact", subdomain_id=i)
        for i, idx in enumerate(partition.overlapped)
    ]


def gmres_residual_oracle(A_dense, f, M_dense, steps):
    """Absolute residual norms of k steps of right-preconditioned GMRES,
    obtained by projecting the initial residual onto the Krylov image space
    span{(AM) r0, ..., (AM)^k r0} directly (dense least squares)."""
    C = A_dense @ M_dense
    r0 = np.asarray(f, dtype=np.float64)
    out = [float(np.linalg.norm(r0))]
    cols = []
    power = r0
    for _ in range(steps):
        power = C @ power
        cols.append(power)
        W = np.column_stack(cols)
        Q, _ = np.linalg.qr(W)
        resid = r0 - Q @ (Q.T @ r0)
        out.append(float(np.linalg.norm(resid)))
    return out


@pytest.fixture(scope="session")
def poisson_63():
    """The 63x63-unknown Poisson grid with 16 ranks and overlap 2, shared by
    the slower end-to-end tests."""
    system = build_poisson(ProblemSpec("poisson2d", (64, 64)))
    part = build_overlap_partition(system.matrix, 16, delta=2)
    solvers = exact_solvers(system.matrix, part)
    return system, part, solvers
