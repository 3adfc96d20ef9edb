"""Per-unit label-field statistics: signal, clusters, noise, and their ratio.

Each probed unit (an output node or an attention head) yields a square
label-by-label field matrix.  The pipeline normalizes it by its maximum
element, Boolean-clips above a threshold, then permutes labels so that as
many above-threshold cells as possible sit on the diagonal.  The matched
diagonal cells group into clusters through their mutual above-threshold
links; above-threshold cells outside every cluster block count as noise.

The permutation objective is a maximum bipartite matching between row labels
and column labels restricted to above-threshold cells; among maximum
matchings the one with minimum noise is chosen (exactly for small matrices,
by deterministic local search for large ones).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import BinaryMatrix, DataError, LabelFieldMatrix, UnitKind

_EXACT_LIMIT = 8  # enumerate all maximum matchings up to this many labels


@dataclass(frozen=True)
class SnpStats:
    """Diagonal/cluster/noise accounting for one unit after permutation."""

    unit: UnitKind
    unit_index: int
    diag: int
    n_c: int
    c_s: float
    noise: int
    permutation: tuple[int, ...]
    clusters: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.diag != sum(len(c) for c in self.clusters):
            raise DataError("bad-stats", "diag must equal the sum of cluster sizes")
        if self.n_c > 0 and abs(self.c_s - self.diag / self.n_c) > 1e-12:
            raise DataError("bad-stats", "c_s must equal diag / n_c")
        if self.noise < 0:
            raise DataError("bad-stats", "noise must be non-negative")


@dataclass(frozen=True)
class SnpAggregate:
    n_labels: int
    n_units: int
    mean_diag: float
    mean_n_c: float
    mean_c_s: float
    mean_noise: float
    snr: float  # math.inf marks the zero-noise case


class LabelAppearance:
    """How often each label shows up in any unit's diagonal clusters."""

    def __init__(
        self,
        appearances: np.ndarray,
        accuracy: np.ndarray | None = None,
        pearson_r: float | None = None,
    ):
        self.appearances = np.asarray(appearances, dtype=np.int64)
        self.accuracy = None if accuracy is None else np.asarray(accuracy, dtype=np.float64)
        self.pearson_r = pearson_r


def normalize_fields(m: LabelFieldMatrix) -> LabelFieldMatrix:
    """Divide every entry by the maximum entry, which becomes exactly 1.

    Negative entries pass through scaled; a matrix with no positive entry
    cannot be normalized this way and is rejected.
    """
    peak = float(m.values.max())
    if peak <= 0.0:
        raise DataError("no-positive-field", f"unit {m.unit_index}: no positive field value")
    return LabelFieldMatrix(m.unit, m.unit_index, m.values / peak)


def clip(m: LabelFieldMatrix, threshold: float) -> BinaryMatrix:
    """Boolean matrix over labels: 1 iff value > threshold (strict)."""
    mask = m.values > threshold
    rows, cols = np.nonzero(mask)
    return BinaryMatrix(m.n_labels, rows, cols, threshold=threshold)


def _binary_to_dense(b: BinaryMatrix) -> np.ndarray:
    dense = np.zeros((b.t_number, b.t_number), dtype=bool)
    dense[b.rows, b.cols] = True
    return dense


def _kuhn_matching(dense: np.ndarray, order: list[list[int]]) -> list[int]:
    """Maximum bipartite matching via augmenting paths.

    `order[i]` lists row i's candidate columns in preference order; returns
    match_col per row (-1 when unmatched).
    """
    n = dense.shape[0]
    match_col = [-1] * n  # row -> col
    match_row = [-1] * n  # col -> row

    def try_augment(row: int, seen: list[bool]) -> bool:
        for col in order[row]:
            if seen[col]:
                continue
            seen[col] = True
            if match_row[col] == -1 or try_augment(match_row[col], seen):
                match_col[row] = col
                match_row[col] = row
                return True
        return False

    for row in range(n):
        if order[row]:
            try_augment(row, [False] * n)
    return match_col


def _preference_order(dense: np.ndarray, values: np.ndarray) -> list[list[int]]:
    """Candidate columns per row: field value descending, then label ascending."""
    n = dense.shape[0]
    order = []
    for i in range(n):
        cols = np.nonzero(dense[i])[0]
        ranked = cols[np.lexsort((cols, -values[i, cols]))]
        order.append([int(c) for c in ranked])
    return order


def _evaluate(dense: np.ndarray, pairs: list[tuple[int, int]], total_ones: int):
    """Cluster the matched pairs and count noise for this matching.

    Pairs p and q join one cluster when either cross cell b[i_p, j_q] or
    b[i_q, j_p] is set; a cluster's block is its rows x its matched columns,
    and every above-threshold cell outside all blocks is noise.
    """
    m = len(pairs)
    parent = list(range(m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p in range(m):
        ip, jp = pairs[p]
        for q in range(p + 1, m):
            iq, jq = pairs[q]
            if dense[ip, jq] or dense[iq, jp]:
                rp, rq = find(p), find(q)
                if rp != rq:
                    parent[rq] = rp
    groups: dict[int, list[int]] = {}
    for p in range(m):
        groups.setdefault(find(p), []).append(p)
    within = 0
    clusters = []
    for members in groups.values():
        rows = [pairs[p][0] for p in members]
        cols = [pairs[p][1] for p in members]
        within += int(dense[np.ix_(rows, cols)].sum())
        clusters.append(tuple(sorted(rows)))
    clusters.sort(key=lambda c: (-len(c), c[0]))
    noise = total_ones - within
    return noise, clusters


def _enumerate_best(dense: np.ndarray, values: np.ndarray, target: int, total_ones: int):
    """Exact search: the minimum-noise matching among all of size `target`."""
    n = dense.shape[0]
    order = _preference_order(dense, values)
    best: dict = {"noise": None, "pairs": None, "clusters": None}

    def remaining_capacity(row: int, used_cols: set[int]) -> int:
        sub_order = [
            [c for c in order[r] if c not in used_cols] for r in range(row, n)
        ]
        match_row: dict[int, int] = {}

        def aug(r: int, seen: set[int]) -> bool:
            for c in sub_order[r]:
                if c in seen:
                    continue
                seen.add(c)
                if c not in match_row or aug(match_row[c], seen):
                    match_row[c] = r
                    return True
            return False

        count = 0
        for r in range(len(sub_order)):
            if sub_order[r] and aug(r, set()):
                count += 1
        return count

    def recurse(row: int, used_cols: set[int], pairs: list[tuple[int, int]]):
        if len(pairs) + remaining_capacity(row, used_cols) < target:
            return
        if len(pairs) == target:
            noise, clusters = _evaluate(dense, pairs, total_ones)
            if best["noise"] is None or noise < best["noise"]:
                best["noise"] = noise
                best["pairs"] = list(pairs)
                best["clusters"] = clusters
            return
        if row == n:
            return
        for col in order[row]:
            if col in used_cols:
                continue
            used_cols.add(col)
            pairs.append((row, col))
            recurse(row + 1, used_cols, pairs)
            pairs.pop()
            used_cols.remove(col)
        recurse(row + 1, used_cols, pairs)

    recurse(0, set(), [])
    return best["pairs"], best["noise"], best["clusters"]


def _local_search(dense: np.ndarray, values: np.ndarray, match_col: list[int], total_ones: int):
    """Deterministic first-improvement search over size-preserving rewirings."""
    n = dense.shape[0]
    pairs = sorted((i, j) for i, j in enumerate(match_col) if j != -1)
    noise, clusters = _evaluate(dense, pairs, total_ones)
    for _ in range(200):
        improved = False
        matched_rows = [i for i, _ in pairs]
        matched_cols = {j for _, j in pairs}
        free_cols = [j for j in range(n) if j not in matched_cols]
        by_row = dict(pairs)
        # swap the columns of two matched rows
        for a_idx in range(len(pairs)):
            ia, ja = pairs[a_idx]
            for b_idx in range(a_idx + 1, len(pairs)):
                ib, jb = pairs[b_idx]
                if dense[ia, jb] and dense[ib, ja]:
                    cand = dict(by_row)
                    cand[ia], cand[ib] = jb, ja
                    cand_pairs = sorted(cand.items())
                    cn, cc = _evaluate(dense, cand_pairs, total_ones)
                    if cn < noise:
                        pairs, noise, clusters = cand_pairs, cn, cc
                        improved = True
                        break
            if improved:
                break
        if not improved:
            # rematch one row to a free column
            for ia in matched_rows:
                for jf in free_cols:
                    if dense[ia, jf]:
                        cand = dict(by_row)
                        cand[ia] = jf
                        cand_pairs = sorted(cand.items())
                        cn, cc = _evaluate(dense, cand_pairs, total_ones)
                        if cn < noise:
                            pairs, noise, clusters = cand_pairs, cn, cc
                            improved = True
                            break
                if improved:
                    break
        if not improved:
            break
    return pairs, noise, clusters


def diagonalize(
    b: BinaryMatrix,
    values: np.ndarray | None = None,
    unit: UnitKind = UnitKind.NODE,
    unit_index: int = 0,
) -> SnpStats:
    """Permute labels to maximize matched diagonal cells, then count.

    Diag is exact (maximum bipartite matching).  Among maximum matchings the
    minimum-noise one is selected: exhaustively for matrices up to
    8 labels, via value-ordered construction plus local search above that.
    """
    n = b.t_number
    if n == 0:
        raise DataError("empty-matrix", "cannot diagonalize an empty matrix")
    dense = _binary_to_dense(b)
    if values is None:
        values = np.zeros((n, n), dtype=np.float64)
    total_ones = int(dense.sum())
    order = _preference_order(dense, values)
    match_col = _kuhn_matching(dense, order)
    target = sum(1 for c in match_col if c != -1)
    if target == 0:
        pairs, noise, clusters = [], total_ones, []
    elif n <= _EXACT_LIMIT:
        pairs, noise, clusters = _enumerate_best(dense, values, target, total_ones)
    else:
        pairs, noise, clusters = _local_search(dense, values, match_col, total_ones)
    # full column ordering: matched rows keep their matched column, the rest
    # take the unused columns in ascending order
    by_row = dict(pairs)
    unused = sorted(set(range(n)) - set(by_row.values()))
    fill = iter(unused)
    permutation = tuple(by_row.get(i, -1) if i in by_row else next(fill) for i in range(n))
    n_c = len(clusters)
    return SnpStats(
        unit=unit,
        unit_index=unit_index,
        diag=len(pairs),
        n_c=n_c,
        c_s=(len(pairs) / n_c) if n_c else 0.0,
        noise=noise,
        permutation=permutation,
        clusters=tuple(clusters),
    )


def analyze_unit(m: LabelFieldMatrix, threshold: float = 0.6) -> SnpStats:
    """normalize -> clip -> diagonalize for one unit."""
    normed = normalize_fields(m)
    clipped = clip(normed, threshold)
    return diagonalize(clipped, values=normed.values, unit=m.unit, unit_index=m.unit_index)


def aggregate(stats: list[SnpStats], n_labels: int) -> SnpAggregate:
    """Unweighted means over units; SNR = n_labels * mean diag / mean noise."""
    if not stats:
        raise DataError("empty-stats", "no unit statistics to aggregate")
    mean_diag = float(np.mean([s.diag for s in stats]))
    mean_n_c = float(np.mean([s.n_c for s in stats]))
    mean_c_s = float(np.mean([s.c_s for s in stats]))
    mean_noise = float(np.mean([s.noise for s in stats]))
    snr = float("inf") if mean_noise == 0.0 else n_labels * mean_diag / mean_noise
    return SnpAggregate(n_labels, len(stats), mean_diag, mean_n_c, mean_c_s, mean_noise, snr)


def label_appearance(
    stats: list[SnpStats],
    n_labels: int,
    accuracy: np.ndarray | None = None,
) -> LabelAppearance:
    """Count each label's cluster memberships across units.

    With a per-label accuracy vector, also reports the Pearson correlation
    between appearances and accuracy.
    """
    appearances = np.zeros(n_labels, dtype=np.int64)
    for s in stats:
        for members in s.clusters:
            for label in members:
                appearances[label] += 1
    if accuracy is None:
        return LabelAppearance(appearances)
    accuracy = np.asarray(accuracy, dtype=np.float64)
    if accuracy.shape != (n_labels,):
        raise DataError("accuracy-mismatch", "accuracy vector length must equal n_labels")
    if np.ptp(appearances) == 0 or np.ptp(accuracy) == 0:
        r = 0.0
    else:
        r = float(np.corrcoef(appearances, accuracy)[0, 1])
    return LabelAppearance(appearances, accuracy, r)
