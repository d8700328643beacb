"""Algebraic domain partitioning, overlap growth, and subdomain coloring.

The adjacency graph is the stored sparsity pattern of the matrix.  Coloring
uses a deliberately strong conflict rule (overlap intersection *or* one-ring
matrix coupling), so same-color corrections read and write disjoint data and
commute bit-exactly.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .linalg import SparseMatrix

STRATEGIES = ("contiguous", "greedy_graph")


@dataclass
class OverlapPartition:
    n_dofs: int
    owned: list[np.ndarray]
    overlapped: list[np.ndarray]
    delta: int
    colors: list[int] = field(default_factory=list)

    @property
    def n_subdomains(self) -> int:
        return len(self.owned)

    @property
    def n_colors(self) -> int:
        return max(self.colors) + 1 if self.colors else 0

    def color_groups(self) -> list[list[int]]:
        """Subdomain ids grouped by color, colors ascending, ids ascending."""
        groups: list[list[int]] = [[] for _ in range(self.n_colors)]
        for i, c in enumerate(self.colors):
            groups[c].append(i)
        return groups

    def validate(self):
        seen = np.zeros(self.n_dofs, dtype=np.int64)
        for i, idx in enumerate(self.owned):
            if idx.size == 0:
                raise ValueError(f"owned set {i} is empty")
            seen[idx] += 1
        if np.any(seen != 1):
            raise ValueError("owned sets must be disjoint and cover all indices")
        for i, (own, over) in enumerate(zip(self.owned, self.overlapped)):
            if not np.all(np.isin(own, over)):
                raise ValueError(f"owned set {i} is not contained in its overlapped set")
        if self.colors and len(self.colors) != self.n_subdomains:
            raise ValueError("need one color per subdomain")


def _pattern_neighbors(A: SparseMatrix, members: np.ndarray) -> np.ndarray:
    """Rows j with a stored entry A[j, k] for some k in `members`.

    Computed through the transpose pattern so it is exact for general
    matrices; for the symmetric operators used here it is plain graph
    adjacency.
    """
    csc = A.scipy.tocsc()
    pieces = [csc.indices[csc.indptr[k]:csc.indptr[k + 1]] for k in members]
    pieces.append(members)
    return np.unique(np.concatenate(pieces)).astype(np.int64)


def partition_indices(A: SparseMatrix, n_subdomains: int, strategy: str = "contiguous") -> list[np.ndarray]:
    """Split {0..n-1} into disjoint nonempty sets, one per subdomain.

    `contiguous` slices the index range into blocks of size floor(n/N) or
    ceil(n/N), larger blocks first.  `greedy_graph` grows connected sets by
    breadth-first search over the matrix graph, seeded at the smallest
    unassigned index.
    """
    n = A.n_rows
    if A.n_cols != n:
        raise ValueError("A must be square")
    if n_subdomains < 1:
        raise ValueError("need at least one subdomain")
    if n_subdomains > n:
        raise ValueError(f"cannot split {n} indices into {n_subdomains} nonempty sets")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")

    q, r = divmod(n, n_subdomains)
    sizes = [q + 1] * r + [q] * (n_subdomains - r)

    if strategy == "contiguous":
        out = []
        start = 0
        for size in sizes:
            out.append(np.arange(start, start + size, dtype=np.int64))
            start += size
        return out

    # greedy_graph: BFS growth with deterministic (ascending) tie-breaking
    csr = A.scipy
    assigned = np.full(n, -1, dtype=np.int64)
    out = []
    for sub, size in enumerate(sizes):
        members: list[int] = []
        queue: deque[int] = deque()
        while len(members) < size:
            if not queue:
                seed = int(np.argmin(assigned >= 0))  # smallest unassigned
                if assigned[seed] >= 0:
                    raise RuntimeError("ran out of unassigned indices")
                assigned[seed] = sub
                members.append(seed)
                queue.append(seed)
                continue
            k = queue.popleft()
            for nb in csr.indices[csr.indptr[k]:csr.indptr[k + 1]]:
                nb = int(nb)
                if assigned[nb] < 0 and len(members) < size:
                    assigned[nb] = sub
                    members.append(nb)
                    queue.append(nb)
        out.append(np.array(sorted(members), dtype=np.int64))
    return out


def grow_overlap(owned_i: np.ndarray, A: SparseMatrix, delta: int) -> np.ndarray:
    """delta applications of one-layer graph growth, saturating at the full
    index set."""
    if delta < 0:
        raise ValueError("overlap level must be nonnegative")
    current = np.unique(np.asarray(owned_i, dtype=np.int64))
    if current.size == 0:
        raise ValueError("cannot grow an empty set")
    for _ in range(delta):
        if current.size == A.n_rows:
            break
        current = _pattern_neighbors(A, current)
    return current


def color_subdomains(overlapped: list[np.ndarray], A: SparseMatrix) -> list[int]:
    """Greedy coloring of the conflict graph.

    Subdomains i and j conflict when their overlapped sets intersect or when
    any stored matrix entry couples them (one-ring rule).  Within a color the
    overlapped sets are then pairwise disjoint and uncoupled.
    """
    n = A.n_rows
    N = len(overlapped)
    member = np.zeros((N, n), dtype=np.float64)
    ring = np.zeros((N, n), dtype=np.float64)
    for i, idx in enumerate(overlapped):
        member[i, idx] = 1.0
        ring[i, _pattern_neighbors(A, np.asarray(idx, dtype=np.int64))] = 1.0
    contact = ring @ member.T  # entry > 0 means ring(i) touches members(j)
    colors = [-1] * N
    for i in range(N):
        taken = {colors[j] for j in range(i) if contact[i, j] > 0 or contact[j, i] > 0}
        c = 0
        while c in taken:
            c += 1
        colors[i] = c
    return colors


def build_overlap_partition(
    A: SparseMatrix,
    n_subdomains: int,
    delta: int,
    strategy: str = "contiguous",
) -> OverlapPartition:
    """Partition, grow overlaps, and color in one call."""
    owned = partition_indices(A, n_subdomains, strategy)
    overlapped = [grow_overlap(idx, A, delta) for idx in owned]
    colors = color_subdomains(overlapped, A)
    part = OverlapPartition(
        n_dofs=A.n_rows, owned=owned, overlapped=overlapped, delta=delta, colors=colors
    )
    part.validate()
    return part
