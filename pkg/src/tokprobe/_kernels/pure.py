"""Pure numpy/Python fallbacks for the compiled kernels.

Same signatures and bit-identical outputs as `_core`; selected automatically
when the extension is not built (or when TOKPROBE_NO_EXT is set).
"""

from __future__ import annotations

import numpy as np


def count_sorted_runs(sorted_keys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Run-length encode an ascending int64 array -> (unique keys, counts)."""
    sorted_keys = np.asarray(sorted_keys, dtype=np.int64)
    if len(sorted_keys) == 0:
        return sorted_keys.copy(), np.zeros(0, dtype=np.int64)
    uniq, counts = np.unique(sorted_keys, return_counts=True)
    return uniq.astype(np.int64), counts.astype(np.int64)


def union_labels(n: int, firsts: np.ndarray, seconds: np.ndarray) -> np.ndarray:
    """Connected-component roots for nodes 0..n-1 under the given edges.

    Union-find with path halving and union by size; linear in edges up to the
    inverse-Ackermann factor.  Returned labels are root indices (an arbitrary
    but deterministic representative per component).
    """
    parent = list(range(n))
    size = [1] * n
    firsts = np.asarray(firsts, dtype=np.int64)
    seconds = np.asarray(seconds, dtype=np.int64)

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in zip(firsts.tolist(), seconds.tolist()):
        ra, rb = find(a), find(b)
        if ra == rb:
            continue
        if size[ra] < size[rb]:
            ra, rb = rb, ra
        parent[rb] = ra
        size[ra] += size[rb]

    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        out[i] = find(i)
    return out


def hist_accumulate(values: np.ndarray, lo: float, hi: float, counts: np.ndarray) -> None:
    """Add a histogram of `values` over [lo, hi] into `counts` (in place).

    len(counts) equal-width bins; values outside [lo, hi] are clamped into the
    edge bins, and hi itself lands in the last bin.
    """
    nbins = len(counts)
    width = (hi - lo) / nbins
    idx = np.floor((np.asarray(values, dtype=np.float64) - lo) / width).astype(np.int64)
    np.clip(idx, 0, nbins - 1, out=idx)
    counts += np.bincount(idx, minlength=nbins).astype(np.int64)
