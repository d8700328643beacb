"""Redundant pairing, redundant data layout, compromised corrections, and
the two-pass resilient sweeps.

Ranks are paired; each rank stores its buddy's subspace data (matrix rows,
right-hand side block, and a copy of the iterate on that block's support) in
addition to its own.  A resilient sweep runs one compromised pass over the
owned subspaces of the alive ranks, refreshes the redundant copies, then runs
a second pass in which every alive rank corrects its buddy's subspace from
the redundant data.  When no rank has failed the composition is exactly two
baseline sweeps; when a rank fails its subspace is still corrected once per
sweep by the buddy.

Message accounting: each sync event costs one point-to-point exchange per
pair whose members are both alive (the two blocks travel together), and a
sweep performs two sync events — one between the passes, one at the end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import SparseMatrix, as_vector, spmv
from .partition import OverlapPartition
from .subspace import EXACT, SubspaceSolver, local_inf_norm

SRSC = "srsc"
PRSC = "prsc"
COMPROMISED_SSC_ALPHA = "compromised_ssc_alpha"
VARIANTS = (SRSC, PRSC, COMPROMISED_SSC_ALPHA)

MODE_ALPHA = "alpha"
MODE_ZERO = "zero"


class PairFailureError(RuntimeError):
    """Both members of a pair are dead; the lost subspace is unrecoverable."""


class StaleRedundantDataError(RuntimeError):
    """A redundant copy was consumed before being synchronized."""


@dataclass(frozen=True)
class PairingMap:
    """Fixed-point-free involution on rank ids."""

    buddy: tuple[int, ...]

    def __post_init__(self):
        n = len(self.buddy)
        for i, b in enumerate(self.buddy):
            if not (0 <= b < n) or b == i or self.buddy[b] != i:
                raise ValueError("buddy map must be an involution without fixed points")

    def of(self, rank: int) -> int:
        return self.buddy[rank]

    @property
    def n_ranks(self) -> int:
        return len(self.buddy)

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [(i, self.buddy[i]) for i in range(len(self.buddy)) if i < self.buddy[i]]


def build_pairing(n_ranks: int) -> PairingMap:
    """Adjacent pairing: even ranks buddy with the next odd rank."""
    if n_ranks < 2 or n_ranks % 2 != 0:
        raise ValueError(f"pairing needs an even rank count >= 2, got {n_ranks}")
    buddy = []
    for i in range(n_ranks):
        buddy.append(i + 1 if i % 2 == 0 else i - 1)
    return PairingMap(buddy=tuple(buddy))


def check_pair_constraint(pairing: PairingMap, alive) -> None:
    alive = np.asarray(alive, dtype=bool)
    for a, b in pairing.pairs:
        if not (alive[a] or alive[b]):
            raise PairFailureError(f"pair ({a}, {b}) has no surviving member")


@dataclass
class SubspaceBlock:
    """Static per-subspace data a rank keeps in memory.

    `support` is the stored column support of the owned rows, so the block
    alone suffices to evaluate the owned rows of the residual.
    """

    subdomain: int
    owned: np.ndarray
    support: np.ndarray
    rows: object  # csr slice, owned rows by support columns
    rhs: np.ndarray | None


class RedundantLayout:
    """Owned and redundant blocks with staleness tracking and a message
    counter.  One subdomain per rank; the redundant block hosted on rank h is
    the block of subspace buddy(h)."""

    def __init__(
        self,
        matrix: SparseMatrix,
        partition: OverlapPartition,
        pairing: PairingMap,
        rhs=None,
    ):
        if partition.n_subdomains != pairing.n_ranks:
            raise ValueError("layout assumes one subdomain per rank")
        self.pairing = pairing
        self.blocks: list[SubspaceBlock] = []
        fv = None if rhs is None else as_vector(rhs, matrix.n_rows)
        for j, owned in enumerate(partition.owned):
            support = matrix.row_support(owned)
            rows = matrix.scipy[owned][:, support]
            self.blocks.append(
                SubspaceBlock(
                    subdomain=j,
                    owned=owned,
                    support=support,
                    rows=rows,
                    rhs=None if fv is None else fv[owned],
                )
            )
        # redundant_v[h]: host h's copy of v on the support of buddy(h)'s block
        self.redundant_v = [np.zeros(self.blocks[pairing.of(h)].support.shape[0]) for h in range(pairing.n_ranks)]
        self.stale = [False] * pairing.n_ranks
        self.messages = 0

    def mark_all_stale(self):
        for h in range(len(self.stale)):
            self.stale[h] = True

    def sync_redundant(self, rank: int, v_global, alive=None) -> bool:
        """Push rank's owned iterate block to its buddy's redundant copy.

        Counts one point-to-point message.  A dead buddy makes this a no-op
        with staleness retained (recovery handles it later).
        """
        host = self.pairing.of(rank)
        if alive is not None and not np.asarray(alive, dtype=bool)[host]:
            self.stale[host] = True
            return False
        block = self.blocks[rank]
        self.redundant_v[host] = as_vector(v_global)[block.support].copy()
        self.stale[host] = False
        self.messages += 1
        return True

    def sync_event(self, v_global, alive=None) -> int:
        """One sweep-level synchronization: every pair with two alive members
        exchanges both blocks; the exchange counts as a single message."""
        vv = as_vector(v_global)
        alive_arr = None if alive is None else np.asarray(alive, dtype=bool)
        exchanged = 0
        for a, b in self.pairing.pairs:
            if alive_arr is not None and not (alive_arr[a] and alive_arr[b]):
                for host in (a, b):
                    if alive_arr[host] and not alive_arr[self.pairing.of(host)]:
                        # the owner is dead; the hosted copy is the live one
                        self.redundant_v[host] = vv[self.blocks[self.pairing.of(host)].support].copy()
                        self.stale[host] = False
                continue
            self.redundant_v[a] = vv[self.blocks[b].support].copy()
            self.redundant_v[b] = vv[self.blocks[a].support].copy()
            self.stale[a] = self.stale[b] = False
            self.messages += 1
            exchanged += 1
        return exchanged

    def recover_residual(self, failed_rank: int, alive=None) -> np.ndarray:
        """Owned-row residual block of a failed rank, computed entirely from
        the buddy's memory."""
        host = self.pairing.of(failed_rank)
        if alive is not None:
            alive_arr = np.asarray(alive, dtype=bool)
            if not alive_arr[host]:
                raise PairFailureError(
                    f"ranks {failed_rank} and {host} are both dead; block lost"
                )
        if self.stale[host]:
            raise StaleRedundantDataError(
                f"redundant copy of subspace {failed_rank} on rank {host} is stale"
            )
        block = self.blocks[failed_rank]
        if block.rhs is None:
            raise ValueError("layout was built without a right-hand side")
        return block.rhs - block.rows @ self.redundant_v[host]


def sync_redundant(layout: RedundantLayout, rank: int, v_global, alive=None) -> bool:
    return layout.sync_redundant(rank, v_global, alive=alive)


def recover_residual(layout: RedundantLayout, failed_rank: int, alive=None) -> np.ndarray:
    return layout.recover_residual(failed_rank, alive=alive)


class ResilientOperator:
    """Two-pass redundant subspace correction over paired ranks.

    Variants: `srsc` (successive sweeps), `prsc` (additive passes composed
    multiplicatively, used as a preconditioner), and
    `compromised_ssc_alpha` (a single successive sweep where failed ranks'
    corrections degrade to the scaled identity instead of dropping out).
    """

    def __init__(
        self,
        matrix: SparseMatrix,
        partition: OverlapPartition,
        solvers: list[SubspaceSolver],
        pairing: PairingMap,
        variant: str = SRSC,
        rhs=None,
        colorize: bool = False,
    ):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        if len(solvers) != partition.n_subdomains:
            raise ValueError("need exactly one solver per subdomain")
        if partition.n_subdomains != pairing.n_ranks:
            raise ValueError("one subdomain per rank is assumed")
        if colorize and not partition.colors:
            raise ValueError("colorized execution needs a colored partition")
        self.matrix = matrix
        self.partition = partition
        self.solvers = solvers
        self.pairing = pairing
        self.variant = variant
        self.colorize = colorize
        self.layout = RedundantLayout(matrix, partition, pairing, rhs=rhs)
        # Richardson scaling for the compromised corrections; the inf-norm
        # bound keeps every local eigenvalue of alpha * A_j inside (0, 1]
        self.alpha = np.array(
            [1.0 / local_inf_norm(matrix, s.local_indices) for s in solvers]
        )
        self.solve_counts = np.zeros(len(solvers), dtype=np.int64)
        self.last_pass_sequences: tuple[list[int], list[int]] = ([], [])

    # -- helpers -------------------------------------------------------------

    @property
    def messages(self) -> int:
        return self.layout.messages

    def _alive(self, alive) -> np.ndarray:
        if alive is None:
            return np.ones(self.pairing.n_ranks, dtype=bool)
        arr = np.asarray(alive, dtype=bool)
        if arr.shape != (self.pairing.n_ranks,):
            raise ValueError("alive snapshot has the wrong length")
        return arr

    def _grouped(self, sequence: list[int]) -> list[list[int]]:
        """Batch a subspace sequence by color (colors ascending, original
        order within a color); without colorization every correction is its
        own batch."""
        if not self.colorize:
            return [[j] for j in sequence]
        colors = self.partition.colors
        n_colors = self.partition.n_colors
        groups = [[] for _ in range(n_colors)]
        for j in sequence:
            groups[colors[j]].append(j)
        return [g for g in groups if g]

    def _run_pass(self, v: np.ndarray, f: np.ndarray, sequence: list[int]) -> np.ndarray:
        for group in self._grouped(sequence):
            r = f - spmv(self.matrix, v)
            for j in group:
                s = self.solvers[j]
                v[s.local_indices] += s.solve_local(r[s.local_indices])
                self.solve_counts[j] += 1
        return v

    # -- operations ----------------------------------------------------------

    def compromised_ssc_apply(self, v, f, failed_rank: int | None = None, mode: str = MODE_ZERO, alive=None) -> np.ndarray:
        """One successive sweep with failed ranks' corrections compromised.

        `zero` drops the failed subspace from the sweep; `alpha` replaces its
        solver by alpha_j * I, executed by the buddy on the redundant data.
        """
        if mode not in (MODE_ALPHA, MODE_ZERO):
            raise ValueError(f"unknown compromise mode {mode!r}")
        alive_arr = self._alive(alive)
        if failed_rank is not None:
            alive_arr = alive_arr.copy()
            alive_arr[failed_rank] = False
        check_pair_constraint(self.pairing, alive_arr)
        vv = as_vector(v, self.matrix.n_cols).copy()
        fv = as_vector(f, self.matrix.n_rows)
        sequence = list(range(self.partition.n_subdomains))
        for group in self._grouped(sequence):
            r = fv - spmv(self.matrix, vv)
            for j in group:
                if alive_arr[j]:
                    s = self.solvers[j]
                    vv[s.local_indices] += s.solve_local(r[s.local_indices])
                    self.solve_counts[j] += 1
                elif mode == MODE_ALPHA:
                    idx = self.solvers[j].local_indices
                    vv[idx] += self.alpha[j] * r[idx]
                    self.solve_counts[j] += 1
        return vv

    def srsc_sweep(self, v, f, alive=None) -> np.ndarray:
        """Pass 1 over owned subspaces of alive ranks (failed corrections
        dropped), redundant sync, pass 2 over the buddy subspaces hosted on
        alive ranks, final sync."""
        alive_arr = self._alive(alive)
        check_pair_constraint(self.pairing, alive_arr)
        vv = as_vector(v, self.matrix.n_cols).copy()
        fv = as_vector(f, self.matrix.n_rows)

        pass1 = [j for j in range(self.partition.n_subdomains) if alive_arr[j]]
        pass2 = [self.pairing.of(h) for h in range(self.pairing.n_ranks) if alive_arr[h]]
        self.last_pass_sequences = (pass1, pass2)

        self.layout.mark_all_stale()
        vv = self._run_pass(vv, fv, pass1)
        self.layout.sync_event(vv, alive_arr)
        vv = self._run_pass(vv, fv, pass2)
        self.layout.sync_event(vv, alive_arr)
        return vv

    def prsc_apply(self, f, alive=None) -> np.ndarray:
        """Preconditioner action of the two additive passes composed
        multiplicatively: v1 from the owned subspaces of alive ranks, then a
        correction from the hosted redundant subspaces on the updated
        residual."""
        alive_arr = self._alive(alive)
        check_pair_constraint(self.pairing, alive_arr)
        fv = as_vector(f, self.matrix.n_rows)

        pass1 = [j for j in range(self.partition.n_subdomains) if alive_arr[j]]
        pass2 = [self.pairing.of(h) for h in range(self.pairing.n_ranks) if alive_arr[h]]
        self.last_pass_sequences = (pass1, pass2)

        self.layout.mark_all_stale()
        v1 = np.zeros_like(fv)
        for j in pass1:
            s = self.solvers[j]
            v1[s.local_indices] += s.solve_local(fv[s.local_indices])
            self.solve_counts[j] += 1
        self.layout.sync_event(v1, alive_arr)
        r = fv - spmv(self.matrix, v1)
        out = v1.copy()
        for j in pass2:
            s = self.solvers[j]
            out[s.local_indices] += s.solve_local(r[s.local_indices])
            self.solve_counts[j] += 1
        self.layout.sync_event(out, alive_arr)
        return out

    def iterate(self, v, f, alive=None) -> np.ndarray:
        """Affine iteration map used for dense propagation assembly."""
        if self.variant == SRSC:
            return self.srsc_sweep(v, f, alive=alive)
        if self.variant == PRSC:
            vv = as_vector(v, self.matrix.n_cols)
            fv = as_vector(f, self.matrix.n_rows)
            return vv + self.prsc_apply(fv - spmv(self.matrix, vv), alive=alive)
        return self.compromised_ssc_apply(v, f, mode=MODE_ALPHA, alive=alive)

    def count_repair_resync(self, rank: int, v_global, alive=None) -> None:
        """Local-failure-local-recovery: a repaired rank refills its blocks
        from the buddy (one exchange) and the pair is marked in sync."""
        host = self.pairing.of(rank)
        alive_arr = self._alive(alive)
        if not alive_arr[host]:
            raise PairFailureError(f"repaired rank {rank} has no alive buddy to resync from")
        vv = as_vector(v_global, self.matrix.n_cols)
        self.layout.redundant_v[rank] = vv[self.layout.blocks[host].support].copy()
        self.layout.redundant_v[host] = vv[self.layout.blocks[rank].support].copy()
        self.layout.stale[rank] = self.layout.stale[host] = False
        self.layout.messages += 1

    def expected_sync_messages(self, sweeps: int, alive=None) -> int:
        """Message budget: 2 sync events per sweep, one exchange per fully
        alive pair per event."""
        alive_arr = self._alive(alive)
        both = sum(1 for a, b in self.pairing.pairs if alive_arr[a] and alive_arr[b])
        return 2 * both * sweeps

    @property
    def buddy_sweep_order(self) -> list[int]:
        """The pass-2 subspace order when every rank is alive; the error-free
        composition equals a baseline sweep in this order after one in
        ascending order."""
        return [self.pairing.of(h) for h in range(self.pairing.n_ranks)]
