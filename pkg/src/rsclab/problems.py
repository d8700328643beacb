"""Desk-scale test systems: finite-difference Poisson matrices and Matrix
Market ingestion for externally supplied operators."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

from .linalg import SparseMatrix, check_symmetric

POISSON_KINDS = ("poisson1d", "poisson2d", "poisson3d")
PROBLEM_KINDS = POISSON_KINDS + ("matrix_file",)


@dataclass(frozen=True)
class ProblemSpec:
    """What system to build: a generated Poisson grid or a file on disk.

    For the Poisson kinds, `grid_dims` holds the cell count per axis; the
    unknowns live on the interior grid (cells - 1 points per axis) of the
    unit interval/square/cube with homogeneous Dirichlet boundary.
    """

    kind: str
    grid_dims: tuple[int, ...] = ()
    file_path: Path | None = None

    def __post_init__(self):
        if self.kind not in PROBLEM_KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if self.kind == "matrix_file":
            if self.file_path is None:
                raise ValueError("matrix_file problems need file_path")
        else:
            if self.file_path is not None:
                raise ValueError("file_path is only valid for matrix_file problems")
            dim = POISSON_KINDS.index(self.kind) + 1
            if len(self.grid_dims) != dim:
                raise ValueError(f"{self.kind} needs {dim} grid dimension(s)")
            if any(m < 2 for m in self.grid_dims):
                raise ValueError("grid too small: need at least 2 cells per axis")


@dataclass
class SparseSystem:
    """A linear system A u = f plus the symmetry flag the solvers rely on."""

    matrix: SparseMatrix
    rhs: np.ndarray = field(repr=False)
    symmetric: bool = True

    def __post_init__(self):
        self.rhs = np.asarray(self.rhs, dtype=np.float64)
        if self.rhs.shape != (self.matrix.n_rows,):
            raise ValueError("right-hand side length does not match the matrix")

    @property
    def n(self) -> int:
        return self.matrix.n_rows


def _second_difference(n: int) -> scipy.sparse.csr_matrix:
    # tridiag(-1, 2, -1), assembled symmetrically so values mirror bit-exactly
    return scipy.sparse.diags(
        [-np.ones(n - 1), 2.0 * np.ones(n), -np.ones(n - 1)],
        offsets=[-1, 0, 1],
        format="csr",
    )


def build_poisson(spec: ProblemSpec) -> SparseSystem:
    """Standard 3/5/7-point difference operator on the interior grid.

    Each axis contributes kron(I, ..., T, ..., I) * (1/h^2) with
    T = tridiag(-1, 2, -1) and h = 1/cells; the first axis varies slowest.
    The right-hand side defaults to all ones.
    """
    if spec.kind not in POISSON_KINDS:
        raise ValueError(f"not a generated Poisson kind: {spec.kind!r}")
    interior = [m - 1 for m in spec.grid_dims]
    eyes = [scipy.sparse.identity(n, format="csr") for n in interior]
    total = None
    for axis, (m, n) in enumerate(zip(spec.grid_dims, interior)):
        term = _second_difference(n) * float(m * m)
        factors = list(eyes)
        factors[axis] = term
        block = factors[0]
        for f in factors[1:]:
            block = scipy.sparse.kron(block, f, format="csr")
        total = block if total is None else (total + block).tocsr()
    matrix = SparseMatrix.from_scipy(total)
    return SparseSystem(matrix=matrix, rhs=np.ones(matrix.n_rows), symmetric=True)


def load_matrix_market(path) -> SparseSystem:
    """Read a Matrix Market file (coordinate or array, `%` comments,
    1-based indices).  Symmetric-storage files come back expanded to full
    storage; the right-hand side defaults to all ones."""
    p = Path(path)
    try:
        raw = scipy.io.mmread(p)
    except Exception as exc:
        raise ValueError(f"malformed Matrix Market file {p}: {exc}") from exc
    if isinstance(raw, np.ndarray):
        if raw.ndim != 2 or raw.shape[0] != raw.shape[1]:
            raise ValueError(f"{p}: expected a square matrix, got shape {raw.shape}")
        matrix = SparseMatrix.from_dense(raw)
    else:
        if raw.shape[0] != raw.shape[1]:
            raise ValueError(f"{p}: expected a square matrix, got shape {raw.shape}")
        csr = raw.tocsr()
        csr.sum_duplicates()
        matrix = SparseMatrix.from_scipy(csr)
    return SparseSystem(
        matrix=matrix,
        rhs=np.ones(matrix.n_rows),
        symmetric=check_symmetric(matrix),
    )


def build_problem(spec: ProblemSpec) -> SparseSystem:
    if spec.kind == "matrix_file":
        return load_matrix_market(spec.file_path)
    return build_poisson(spec)
