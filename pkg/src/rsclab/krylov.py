"""Outer solvers: restarted flexible GMRES and a stationary sweep driver.

FGMRES is right-preconditioned with modified Gram-Schmidt and Givens
rotations and stores the preconditioned basis, so the preconditioner is free
to change between inner steps (that is exactly what happens when ranks fail
mid-solve).  The stopping test uses the true unpreconditioned relative
Euclidean residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import SparseMatrix, as_vector, spmv

#: Happy-breakdown tolerance on the Hessenberg subdiagonal.
BREAKDOWN_TOL = 1e-14


@dataclass
class SolverConfig:
    restart: int = 30
    tol: float = 1e-8
    max_iters: int = 10000

    def __post_init__(self):
        if self.restart < 1:
            raise ValueError("restart length must be at least 1")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual_history: list[float]
    messages: int = 0
    active_ranks_per_iter: list = field(default_factory=list)
    diverged: bool = False
    reason: str = ""


def fgmres(A: SparseMatrix, f, precond=None, config: SolverConfig | None = None):
    """Solve A x = f by restarted flexible GMRES from a zero initial guess.

    `precond` maps a residual to a correction (identity when omitted) and is
    consulted exactly once per inner iteration, so a stateful callable can
    swap the operator between steps.  Happy breakdown counts as convergence;
    running out of iterations returns converged=False.
    """
    cfg = config or SolverConfig()
    fv = as_vector(f, A.n_rows)
    n = fv.shape[0]
    if A.n_cols != n:
        raise ValueError("A must be square")
    apply_m = (lambda r: r.copy()) if precond is None else precond

    beta0 = float(np.linalg.norm(fv))
    if beta0 == 0.0:
        return np.zeros(n), SolveReport(True, 0, [0.0], reason="zero right-hand side")

    x = np.zeros(n)
    history = [1.0]
    total = 0
    m = cfg.restart

    while True:
        r = fv - spmv(A, x)
        beta = float(np.linalg.norm(r))
        if beta / beta0 <= cfg.tol:
            return x, SolveReport(True, total, history)
        if total >= cfg.max_iters:
            return x, SolveReport(False, total, history, reason="max_iters exceeded")

        V = np.zeros((m + 1, n))
        Z = np.zeros((m, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta

        j = -1
        breakdown = False
        for j in range(m):
            if total >= cfg.max_iters:
                j -= 1
                break
            Z[j] = apply_m(V[j])
            w = spmv(A, Z[j])
            for i in range(j + 1):  # modified Gram-Schmidt
                H[i, j] = float(np.dot(w, V[i]))
                w -= H[i, j] * V[i]
            h_next = float(np.linalg.norm(w))  # new subdiagonal, pre-rotation
            H[j + 1, j] = h_next

            for i in range(j):  # previously accumulated rotations
                hi = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = hi
            denom = float(np.hypot(H[j, j], h_next))
            if denom == 0.0:
                # column contributes nothing; drop it and stop the cycle
                j -= 1
                breakdown = True
                break
            cs[j] = H[j, j] / denom
            sn[j] = h_next / denom
            breakdown = h_next <= BREAKDOWN_TOL
            H[j, j] = denom
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]

            total += 1
            relres = abs(g[j + 1]) / beta0
            history.append(relres)
            if breakdown or relres <= cfg.tol:
                break
            V[j + 1] = w / h_next

        if j >= 0:
            y = np.zeros(j + 1)
            for i in range(j, -1, -1):  # back substitution on the Givens-reduced R
                y[i] = (g[i] - float(np.dot(H[i, i + 1:j + 1], y[i + 1:j + 1]))) / H[i, i]
            x = x + Z[: j + 1].T @ y

        if breakdown:
            true_rel = float(np.linalg.norm(fv - spmv(A, x))) / beta0
            return x, SolveReport(
                True, total, history, reason=f"happy breakdown, relres {true_rel:.3e}"
            )


def stationary_solve(A: SparseMatrix, f, sweep, config: SolverConfig | None = None):
    """Repeat v <- sweep(v, f) until the relative Euclidean residual meets
    the tolerance.  Residual growth by 1e6 aborts with a diagnostic."""
    cfg = config or SolverConfig()
    fv = as_vector(f, A.n_rows)
    beta0 = float(np.linalg.norm(fv))
    n = fv.shape[0]
    if beta0 == 0.0:
        return np.zeros(n), SolveReport(True, 0, [0.0], reason="zero right-hand side")

    v = np.zeros(n)
    history = [1.0]
    for k in range(cfg.max_iters):
        v = sweep(v, fv)
        relres = float(np.linalg.norm(fv - spmv(A, v))) / beta0
        history.append(relres)
        if relres <= cfg.tol:
            return v, SolveReport(True, k + 1, history)
        if relres > 1e6:
            return v, SolveReport(
                False,
                k + 1,
                history,
                diverged=True,
                reason=f"residual grew to {relres:.3e} of the initial norm",
            )
    return v, SolveReport(False, cfg.max_iters, history, reason="max_iters exceeded")
