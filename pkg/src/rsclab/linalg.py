"""Sparse and dense linear algebra kernels shared by every solver component.

CSR is the single sparse format used throughout the package.  Matrix-vector
products delegate to scipy's CSR kernel, which accumulates each row strictly
left to right, so repeated runs are bit-identical.  The dense eigenvalue
oracle (`operator_a_norm`) is a self-contained cyclic Jacobi iteration so
that operator-norm verification does not share code with any solver path.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse

#: Largest problem size accepted by the dense verification oracles.
DEFAULT_ORACLE_CAP = 512


class SingularBlockError(np.linalg.LinAlgError):
    """A local block factorization hit a negligible or unstable pivot."""


class NotSpdError(np.linalg.LinAlgError):
    """An operation that requires a symmetric positive definite matrix got
    something else."""


def as_vector(x, n: int | None = None) -> np.ndarray:
    """Coerce `x` to a 1-D float64 array, optionally checking its length."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise ValueError(f"dimension mismatch: expected length {n}, got {v.shape[0]}")
    return v


class SparseMatrix:
    """Validated CSR matrix.

    Parameters mirror the raw CSR layout: `row_offsets` has length
    ``n_rows + 1`` and is monotone nondecreasing, `col_indices[k] < n_cols`,
    and no row stores the same column twice.  Column indices are kept sorted
    within each row so that products and slices are deterministic.
    """

    __slots__ = ("n_rows", "n_cols", "row_offsets", "col_indices", "values", "_csr")

    def __init__(self, n_rows, n_cols, row_offsets, col_indices, values):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.row_offsets = np.asarray(row_offsets, dtype=np.int64)
        self.col_indices = np.asarray(col_indices, dtype=np.int64)
        self.values = np.asarray(values, dtype=np.float64)
        self._csr = None
        self._validate()

    def _validate(self):
        off = self.row_offsets
        if off.shape != (self.n_rows + 1,):
            raise ValueError("row_offsets must have length n_rows + 1")
        if off[0] != 0 or off[-1] != self.col_indices.shape[0]:
            raise ValueError("row_offsets must start at 0 and end at nnz")
        if np.any(np.diff(off) < 0):
            raise ValueError("row_offsets must be monotone nondecreasing")
        if self.values.shape != self.col_indices.shape:
            raise ValueError("values and col_indices must have equal length")
        if self.col_indices.size:
            if self.col_indices.min() < 0 or self.col_indices.max() >= self.n_cols:
                raise ValueError("column index out of range")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("matrix values must be finite")
        # sort columns within each row, then duplicates show up as zero diffs
        csr = scipy.sparse.csr_matrix(
            (self.values, self.col_indices, self.row_offsets),
            shape=(self.n_rows, self.n_cols),
            copy=False,
        )
        if not csr.has_sorted_indices:
            csr.sort_indices()
            self.col_indices = csr.indices.astype(np.int64)
            self.values = csr.data
        d = np.diff(self.col_indices)
        row_starts = self.row_offsets[1:-1]
        interior = np.ones(d.shape[0], dtype=bool)
        interior[row_starts - 1] = False
        if np.any(d[interior] == 0):
            raise ValueError("duplicate column within a row")
        self._csr = scipy.sparse.csr_matrix(
            (self.values, self.col_indices.astype(np.int32), self.row_offsets.astype(np.int32)),
            shape=(self.n_rows, self.n_cols),
            copy=False,
        )

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_scipy(cls, m) -> "SparseMatrix":
        csr = scipy.sparse.csr_matrix(m)
        csr.sort_indices()
        return cls(csr.shape[0], csr.shape[1], csr.indptr, csr.indices, csr.data)

    @classmethod
    def from_dense(cls, a) -> "SparseMatrix":
        return cls.from_scipy(scipy.sparse.csr_matrix(np.asarray(a, dtype=np.float64)))

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls.from_scipy(scipy.sparse.identity(n, format="csr"))

    # -- views --------------------------------------------------------------

    @property
    def scipy(self) -> scipy.sparse.csr_matrix:
        return self._csr

    @property
    def nnz(self) -> int:
        return int(self.values.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def toarray(self) -> np.ndarray:
        return self._csr.toarray()

    def submatrix_dense(self, indices) -> np.ndarray:
        """Dense principal-style block A[indices, indices]."""
        idx = np.asarray(indices, dtype=np.int64)
        return self._csr[idx][:, idx].toarray()

    def row_support(self, rows) -> np.ndarray:
        """Sorted union of stored column indices over the given rows."""
        rows = np.asarray(rows, dtype=np.int64)
        pieces = [self.col_indices[self.row_offsets[r]:self.row_offsets[r + 1]] for r in rows]
        if not pieces:
            return np.empty(0, dtype=np.int64)
        return np.unique(np.concatenate(pieces))

    def __repr__(self):
        return f"SparseMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"


def spmv(A: SparseMatrix, x) -> np.ndarray:
    """y = A x.

    Each row accumulates its stored products left to right (scipy's CSR
    kernel), so results are reproducible bit for bit.
    """
    xv = as_vector(x, A.n_cols)
    return A.scipy @ xv


def inner(x, y) -> float:
    xv = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    if xv.shape != yv.shape:
        raise ValueError(f"dimension mismatch: {xv.shape} vs {yv.shape}")
    return float(np.dot(xv, yv))


def a_inner(A: SparseMatrix, x, y) -> float:
    """(A x, y).  Symmetry of A is the caller's obligation."""
    return inner(spmv(A, x), y)


def a_norm(A: SparseMatrix, x) -> float:
    q = a_inner(A, x, x)
    if q < -1e-12 * max(inner(x, x), 1e-300):
        raise NotSpdError(f"(Ax, x) = {q} < 0: matrix is not positive definite")
    return float(np.sqrt(max(q, 0.0)))


# -- dense factorizations ---------------------------------------------------


@dataclass(frozen=True)
class LUFactor:
    """Partial-pivot LU factors of a small dense block."""

    lu: np.ndarray
    piv: np.ndarray

    def solve(self, b) -> np.ndarray:
        rhs = np.asarray(b, dtype=np.float64)
        if rhs.shape[0] != self.lu.shape[0]:
            raise ValueError("right-hand side length does not match factor size")
        return scipy.linalg.lu_solve((self.lu, self.piv), rhs, check_finite=False)

    @property
    def n(self) -> int:
        return self.lu.shape[0]


def lu_factor_checked(M) -> LUFactor:
    """Factor a square dense matrix, rejecting negligible or exploding pivots."""
    Md = np.asarray(M, dtype=np.float64)
    if Md.ndim != 2 or Md.shape[0] != Md.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {Md.shape}")
    if Md.shape[0] == 0:
        raise ValueError("cannot factor an empty matrix")
    scale = np.abs(Md).max()
    if scale == 0.0:
        raise SingularBlockError("zero matrix")
    with warnings.catch_warnings():
        # the pivot check below raises on singularity; scipy's warning is noise
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(Md, check_finite=False)
    diag = np.abs(np.diag(lu))
    if diag.min() < 1e-14 * scale:
        raise SingularBlockError(
            f"pivot {diag.min():.3e} below 1e-14 * max|M| = {1e-14 * scale:.3e}"
        )
    # partial pivoting keeps multipliers <= 1; enormous growth flags a
    # numerically singular block that slipped past the pivot test
    if np.abs(lu).max() > 1e14 * scale:
        raise SingularBlockError("pivot growth beyond 1e14, block is numerically singular")
    return LUFactor(lu=lu, piv=piv)


def dense_lu_solve(M, b) -> np.ndarray:
    """Solve M x = b by partial-pivot LU for a small dense block."""
    x = lu_factor_checked(M).solve(b)
    if not np.all(np.isfinite(x)):
        raise SingularBlockError("non-finite solution from LU solve")
    return x


def dense_cholesky(M) -> np.ndarray:
    """Lower Cholesky factor; failure signals a non-SPD matrix."""
    Md = np.asarray(M, dtype=np.float64)
    try:
        return np.linalg.cholesky(Md)
    except np.linalg.LinAlgError as exc:
        raise NotSpdError(f"Cholesky failed: {exc}") from exc


def check_symmetric(A: SparseMatrix, tol: float = 1e-12) -> bool:
    """Relative symmetry check on the stored entries."""
    diff = (A.scipy - A.scipy.T).tocoo()
    if diff.nnz == 0:
        return True
    scale = np.abs(A.values).max() if A.nnz else 0.0
    if scale == 0.0:
        return bool(np.abs(diff.data).max() == 0.0)
    return bool(np.abs(diff.data).max() <= tol * scale)


# -- dense symmetric eigensolver (verification oracle) ----------------------


def jacobi_eigh(S, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues ascending, eigenvectors as columns).  Jacobi is slow
    but extremely accurate at the oracle sizes used here, which is the point:
    verification results should not inherit roundoff from the code under test.
    """
    a = np.array(S, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), v
    fro = np.linalg.norm(a)
    if fro == 0.0:
        return np.zeros(n), v
    for _ in range(max_sweeps):
        off = np.sqrt(max(fro**2 - np.sum(a.diagonal() ** 2), 0.0))
        if off <= 1e-15 * fro:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                # skip rotations that cannot move the off-diagonal mass
                if abs(apq) <= 1e-18 * fro:
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) if theta != 0.0 else 1.0
                t = t / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        fro = np.linalg.norm(a)
    w = a.diagonal().copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def operator_a_norm(A: SparseMatrix, E, oracle_cap: int = DEFAULT_ORACLE_CAP) -> float:
    """A-operator norm of a dense matrix E: max of ||E v||_A / ||v||_A.

    Computed as the square root of the largest eigenvalue of the generalized
    problem (E^T A E) v = lambda A v; with A = L L^T this is the largest
    eigenvalue of L^{-1} (E^T A E) L^{-T}, found by cyclic Jacobi.
    """
    Ed = np.asarray(E, dtype=np.float64)
    n = A.n_rows
    if A.n_cols != n:
        raise ValueError("A must be square")
    if Ed.shape != (n, n):
        raise ValueError(f"E must be {n}x{n}, got {Ed.shape}")
    if n > oracle_cap:
        raise ValueError(f"problem size {n} exceeds the oracle cap {oracle_cap}")
    if not check_symmetric(A):
        raise NotSpdError("A is not symmetric")
    Ad = A.toarray()
    L = dense_cholesky(Ad)
    S = Ed.T @ (Ad @ Ed)
    S = 0.5 * (S + S.T)
    Y = scipy.linalg.solve_triangular(L, S, lower=True, check_finite=False)
    B = scipy.linalg.solve_triangular(L, Y.T, lower=True, check_finite=False).T
    B = 0.5 * (B + B.T)
    w, _ = jacobi_eigh(B)
    return float(np.sqrt(max(w[-1], 0.0)))
