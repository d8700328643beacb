"""Baseline one-level overlapping Schwarz operators: the additive (parallel)
preconditioner, the multiplicative (successive) sweep, and its colorized
variant that batches mutually uncoupled subdomains.

The additive operator is used purely as a preconditioner; the sweeps double
as stationary iterations.  `assemble_propagation` densifies I - B A for the
verification oracles by driving the operator with unit-vector errors.
"""

from __future__ import annotations

import numpy as np

from .linalg import DEFAULT_ORACLE_CAP, SparseMatrix, as_vector, spmv
from .partition import OverlapPartition
from .subspace import SubspaceSolver

PSC = "psc"
SSC = "ssc"
SSC_COLORIZED = "ssc_colorized"
VARIANTS = (PSC, SSC, SSC_COLORIZED)


class SchwarzOperator:
    """One-level Schwarz operator over a fixed partition and solver set."""

    def __init__(
        self,
        matrix: SparseMatrix,
        partition: OverlapPartition,
        solvers: list[SubspaceSolver],
        variant: str = SSC,
        sweep_order: list[int] | None = None,
    ):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        if len(solvers) != partition.n_subdomains:
            raise ValueError("need exactly one solver per subdomain")
        n = partition.n_subdomains
        order = list(range(n)) if sweep_order is None else [int(i) for i in sweep_order]
        if sorted(order) != list(range(n)):
            raise ValueError("sweep_order must be a permutation of the subdomain ids")
        if variant == SSC_COLORIZED and not partition.colors:
            raise ValueError("colorized sweeps need a colored partition")
        self.matrix = matrix
        self.partition = partition
        self.solvers = solvers
        self.variant = variant
        self.sweep_order = order
        self.solve_counts = np.zeros(n, dtype=np.int64)

    # -- core applications ---------------------------------------------------

    def apply_psc(self, f) -> np.ndarray:
        """Additive action sum_i R_i^T S_i R_i f; independent of sweep order
        up to floating-point summation."""
        fv = as_vector(f, self.matrix.n_rows)
        out = np.zeros_like(fv)
        for i in self.sweep_order:
            s = self.solvers[i]
            out[s.local_indices] += s.solve_local(fv[s.local_indices])
            self.solve_counts[i] += 1
        return out

    def ssc_sweep(self, v, f) -> np.ndarray:
        """One multiplicative sweep: corrections applied successively in
        sweep order, each reading the freshly updated residual."""
        vv = as_vector(v, self.matrix.n_cols).copy()
        fv = as_vector(f, self.matrix.n_rows)
        for i in self.sweep_order:
            s = self.solvers[i]
            r = fv - spmv(self.matrix, vv)
            vv[s.local_indices] += s.solve_local(r[s.local_indices])
            self.solve_counts[i] += 1
        return vv

    def ssc_colorized_sweep(self, v, f) -> np.ndarray:
        """Multiplicative sweep executed color by color.

        All corrections of one color read the same residual; because
        same-color subdomains are disjoint and uncoupled this is bit-identical
        to `ssc_sweep` with any color-consecutive ordering.
        """
        if not self.partition.colors:
            raise ValueError("operator was built without a coloring")
        vv = as_vector(v, self.matrix.n_cols).copy()
        fv = as_vector(f, self.matrix.n_rows)
        for group in self.partition.color_groups():
            r = fv - spmv(self.matrix, vv)
            for i in group:
                s = self.solvers[i]
                vv[s.local_indices] += s.solve_local(r[s.local_indices])
                self.solve_counts[i] += 1
        return vv

    # -- uniform iteration map -------------------------------------------------

    def iterate(self, v, f) -> np.ndarray:
        """The affine map whose error propagation is I - B A."""
        if self.variant == PSC:
            vv = as_vector(v, self.matrix.n_cols)
            fv = as_vector(f, self.matrix.n_rows)
            return vv + self.apply_psc(fv - spmv(self.matrix, vv))
        if self.variant == SSC:
            return self.ssc_sweep(v, f)
        return self.ssc_colorized_sweep(v, f)


def assemble_propagation(op, oracle_cap: int = DEFAULT_ORACLE_CAP, alive=None) -> np.ndarray:
    """Dense I - B A, column by column.

    Column j is the error left behind when the operator iterates once on the
    manufactured problem u = e_j, f = A e_j starting from zero.  Works for
    any object exposing `matrix` and `iterate(v, f[, alive])`.
    """
    A = op.matrix
    n = A.n_rows
    if n > oracle_cap:
        raise ValueError(f"problem size {n} exceeds the oracle cap {oracle_cap}")
    E = np.empty((n, n))
    zero = np.zeros(n)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        f = spmv(A, e)
        if alive is None:
            v = op.iterate(zero, f)
        else:
            v = op.iterate(zero, f, alive=alive)
        E[:, j] = e - v
    return E
