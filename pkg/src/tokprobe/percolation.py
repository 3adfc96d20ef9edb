"""Connected-component clustering of the adjacency graph.

Union-find with path compression is the production implementation (linear in
the edge count up to the inverse-Ackermann factor); a breadth-first variant
is kept as an independent oracle for the dual-implementation check.

Participants are the retained rows of the upstream normalized confusion;
participants with no edges form size-1 clusters.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable

import numpy as np

from . import _kernels
from .types import AdjacencyMatrix, ClusterSet, DataError


class ClusterSizeDistribution:
    """(size, count) rows, sizes ascending; conserves the token total."""

    def __init__(self, rows: list[tuple[int, int]]):
        self.rows = sorted((int(s), int(c)) for s, c in rows)

    @property
    def total_tokens(self) -> int:
        return sum(s * c for s, c in self.rows)

    def __eq__(self, other) -> bool:
        return isinstance(other, ClusterSizeDistribution) and self.rows == other.rows


def _check_edges(adj: AdjacencyMatrix, member: np.ndarray) -> None:
    for col in (adj.firsts, adj.seconds):
        if len(col) and not member[col].all():
            bad = int(col[np.argmin(member[col])])
            raise DataError("edge-outside-participants", f"edge touches non-participant {bad}")


def _participant_index(participants: Iterable[int], t_number: int) -> np.ndarray:
    ids = np.asarray(sorted(set(int(p) for p in participants)), dtype=np.int64)
    if len(ids) and (ids[0] < 0 or ids[-1] >= t_number):
        raise DataError("index-out-of-range", "participant outside [0, t_number)")
    return ids


def percolate(adj: AdjacencyMatrix, participants: Iterable[int]) -> ClusterSet:
    """Partition the participants into connected components of the graph."""
    ids = _participant_index(participants, adj.t_number)
    member = np.zeros(adj.t_number, dtype=bool)
    member[ids] = True
    _check_edges(adj, member)
    # compact ids so the union-find array covers only participants
    compact = np.full(adj.t_number, -1, dtype=np.int64)
    compact[ids] = np.arange(len(ids))
    roots = _kernels.union_labels(
        len(ids),
        np.ascontiguousarray(compact[adj.firsts]),
        np.ascontiguousarray(compact[adj.seconds]),
    )
    groups: dict[int, list[int]] = {}
    for local, root in enumerate(roots.tolist()):
        groups.setdefault(root, []).append(int(ids[local]))
    return ClusterSet(list(groups.values()))


def percolate_bfs(adj: AdjacencyMatrix, participants: Iterable[int]) -> ClusterSet:
    """Independent oracle: repeated breadth-first reachability."""
    ids = _participant_index(participants, adj.t_number)
    member = np.zeros(adj.t_number, dtype=bool)
    member[ids] = True
    _check_edges(adj, member)
    neighbors: dict[int, list[int]] = {int(t): [] for t in ids}
    for i, j in zip(adj.firsts.tolist(), adj.seconds.tolist()):
        neighbors[i].append(j)
        neighbors[j].append(i)
    seen: set[int] = set()
    clusters = []
    for start in ids.tolist():
        if start in seen:
            continue
        queue = deque([start])
        seen.add(start)
        component = []
        while queue:
            node = queue.popleft()
            component.append(node)
            for nxt in neighbors[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        clusters.append(component)
    return ClusterSet(clusters)


def size_distribution(clusters: ClusterSet) -> ClusterSizeDistribution:
    """Count clusters per size."""
    counts: dict[int, int] = {}
    for size in clusters.sizes():
        counts[size] = counts.get(size, 0) + 1
    dist = ClusterSizeDistribution(list(counts.items()))
    if dist.total_tokens != clusters.n_tokens:
        raise DataError("not-a-partition", "size distribution does not conserve tokens")
    return dist
