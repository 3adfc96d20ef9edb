"""Token confusion counts and the graph structures derived from them.

The pipeline: count (true -> predicted) pairs, normalize each row by its
diagonal count (dropping rows whose diagonal is zero or beaten), binarize at
a threshold, then keep only mutual links — the elementwise product of the
binary matrix with its transpose — which yields a symmetric adjacency.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .types import (
    AdjacencyMatrix,
    BinaryMatrix,
    ConfusionMatrix,
    DataError,
    EventLog,
    MaskEvent,
    NormalizedConfusion,
)


@dataclass(frozen=True)
class ThresholdConfig:
    th: float = 0.05

    def __post_init__(self):
        if not (0.0 < self.th <= 1.0):
            raise DataError("bad-threshold", "threshold must lie in (0, 1]")


class TopKTable:
    """Per token, its most-confused partners with normalized values.

    Lists are sorted by value descending (ties by token id ascending) and may
    be shorter than K when a row has fewer off-diagonal entries.
    """

    def __init__(self, k: int, per_token: dict[int, list[tuple[int, float]]]):
        self.k = int(k)
        self.per_token = per_token
        for tid, pairs in per_token.items():
            vals = [v for _, v in pairs]
            if any(v <= 0 for v in vals):
                raise DataError("bad-topk", f"token {tid}: values must be strictly positive")
            if any(vals[i] < vals[i + 1] for i in range(len(vals) - 1)):
                raise DataError("bad-topk", f"token {tid}: values must be non-increasing")


def build_confusion(
    events: EventLog | "list[MaskEvent]",
    t_number: int | None = None,
) -> ConfusionMatrix:
    """Count how often each true token was identified as each predicted token."""
    log = events if isinstance(events, EventLog) else EventLog.from_events(events)
    if len(log) == 0:
        raise DataError("empty-events", "cannot build a confusion matrix from no events")
    if t_number is None:
        t_number = int(max(log.true_tokens.max(), log.pred_tokens.max())) + 1
    if log.true_tokens.max() >= t_number or log.pred_tokens.max() >= t_number:
        raise DataError("token-out-of-range", "event token id outside [0, t_number)")
    keys = log.true_tokens * np.int64(t_number) + log.pred_tokens
    keys = np.sort(keys, kind="stable")
    uniq, counts = _kernels.count_sorted_runs(keys)
    rows, cols = np.divmod(uniq, t_number)
    return ConfusionMatrix(t_number, rows, cols, counts)


def normalize_confusion(m: ConfusionMatrix) -> NormalizedConfusion:
    """Divide each retained row by its diagonal count.

    A row is retained iff its diagonal count is > 0 and >= every off-diagonal
    count in the row; an off-diagonal tie keeps the row (the diagonal is still
    jointly maximal).  Excluded tokens keep their appearances as predicted
    tokens inside other rows.
    """
    rows, cols, counts = m.rows, m.cols, m.counts
    if m.nnz == 0:
        raise DataError("all-rows-excluded", "confusion matrix has no rows")
    # rows are sorted, so per-row maxima come from segment reductions
    present, seg_start = np.unique(rows, return_index=True)
    seg_max = np.maximum.reduceat(counts, seg_start)
    diag = np.zeros(m.t_number, dtype=np.int64)
    on_diag = rows == cols
    diag[rows[on_diag]] = counts[on_diag]
    retained_mask = (diag[present] > 0) & (diag[present] == seg_max)
    retained = present[retained_mask]
    excluded = present[~retained_mask]
    if len(retained) == 0:
        raise DataError("all-rows-excluded", "every row has a zero or beaten diagonal")
    is_retained = np.zeros(m.t_number, dtype=bool)
    is_retained[retained] = True
    keep = is_retained[rows]
    out_rows = rows[keep]
    out_cols = cols[keep]
    values = counts[keep] / diag[out_rows]
    values[out_rows == out_cols] = 1.0
    return NormalizedConfusion(m.t_number, out_rows, out_cols, values, excluded, basis=m)


def binarize_threshold(n: NormalizedConfusion, cfg: ThresholdConfig) -> BinaryMatrix:
    """Edge (i, j) iff normalized value > th; retained diagonals always present."""
    above = n.values > cfg.th
    above |= n.rows == n.cols
    return BinaryMatrix(n.t_number, n.rows[above], n.cols[above], threshold=cfg.th)


def adjacency(b: BinaryMatrix) -> AdjacencyMatrix:
    """Keep unordered pairs {i, j} present in both directions; drop self-pairs."""
    off = b.rows != b.cols
    rows = b.rows[off]
    cols = b.cols[off]
    t = np.int64(b.t_number)
    forward = rows * t + cols
    backward = cols * t + rows
    mutual = np.intersect1d(forward, backward, assume_unique=True)
    i, j = np.divmod(mutual, t)
    lower = i < j  # each surviving pair appears in both orientations; keep one
    return AdjacencyMatrix(b.t_number, i[lower], j[lower])


def top_k(n: NormalizedConfusion, k: int, min_count: int = 0) -> TopKTable:
    """The k largest off-diagonal normalized values of each retained row.

    `min_count` drops partners whose raw count in the basis matrix is below
    the floor (off by default: rare partners carry little evidence but the
    cut is a reporting choice, not part of the pipeline).
    """
    if k < 1:
        raise DataError("bad-k", "k must be >= 1")
    per_token: dict[int, list[tuple[int, float]]] = {}
    basis = n.basis
    for tid in n.retained:
        cols, vals = n.row_slice(int(tid))
        off = cols != tid
        cols, vals = cols[off], vals[off]
        if min_count > 0 and basis is not None and len(cols):
            bcols, bcounts = basis.row_slice(int(tid))
            counts = dict(zip(bcols.tolist(), bcounts.tolist()))
            keep = np.array([counts.get(int(c), 0) >= min_count for c in cols], dtype=bool)
            cols, vals = cols[keep], vals[keep]
        order = np.lexsort((cols, -vals))[:k]
        per_token[int(tid)] = [(int(cols[o]), float(vals[o])) for o in order]
    return TopKTable(k, per_token)


def offdiag_histogram(
    n: NormalizedConfusion, bins: int, lo: float = 0.0, hi: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    """Distribution of the normalized off-diagonal values (edges, counts)."""
    if bins < 2:
        raise DataError("bad-bins", "need at least 2 bins")
    off = n.rows != n.cols
    counts = np.zeros(bins, dtype=np.int64)
    _kernels.hist_accumulate(np.ascontiguousarray(n.values[off]), lo, hi, counts)
    return np.linspace(lo, hi, bins + 1), counts
