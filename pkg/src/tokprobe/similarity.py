"""Cosine-similarity structure of the embedding table.

All pairwise scans stream over row blocks (a dense token-pair matrix at
30k tokens would be ~7.5 GB); per-row results and integer histograms merge
deterministically regardless of how many worker threads are used.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .rng import CounterRng
from .types import BinaryMatrix, DataError, EmbeddingMatrix

_BLOCK_ROWS = 1024


def _worker_count(threads: int) -> int:
    # each block's matmul already fans out across cores inside BLAS, so more
    # workers than physical CPUs only adds contention (results are identical
    # at any worker count; blocks merge by index)
    return max(1, min(threads, os.cpu_count() or 1))


@dataclass(frozen=True)
class AbttConfig:
    """How many leading principal components to strip (after mean removal)."""

    r: int
    max_iterations: int = 100_000
    tolerance: float = 1e-8

    @staticmethod
    def default_r(e_length: int) -> int:
        return int(round(e_length / 100))

    def __post_init__(self):
        if self.r < 0:
            raise DataError("bad-abtt-r", "r must be >= 0")


@dataclass(frozen=True)
class CslsConfig:
    """Neighborhood size for local-density rescaling of cosines."""

    neighborhood: int = 10

    def __post_init__(self):
        if self.neighborhood < 1:
            raise DataError("bad-csls-n", "neighborhood must be >= 1")


class SimilarityRowTop:
    """Per token, its highest-cosine partners (self excluded), descending."""

    def __init__(self, q: int, per_token: dict[int, list[tuple[int, float]]]):
        self.q = int(q)
        self.per_token = per_token


def cosine(e: EmbeddingMatrix, i: int, j: int) -> float:
    """Dot product of the unit-normalized rows i and j, clipped to [-1, 1].

    Computed in a canonical operand order so cosine(i, j) == cosine(j, i)
    exactly.
    """
    a, b = (i, j) if i <= j else (j, i)
    va = e.vectors[a]
    vb = e.vectors[b]
    ua = va / np.linalg.norm(va)
    ub = vb / np.linalg.norm(vb)
    return float(np.clip(np.dot(ua, ub), -1.0, 1.0))


def _blocks(n: int, block_rows: int = _BLOCK_ROWS):
    for start in range(0, n, block_rows):
        yield start, min(start + block_rows, n)


def similarity_histogram(
    e: EmbeddingMatrix, bins: int, threads: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """Histogram of all ordered token-pair cosines, diagonal included.

    Returns (edges over [-1, 1], counts).  Streams block by block; never
    materializes the full pair matrix.
    """
    if bins < 2:
        raise DataError("bad-bins", "need at least 2 bins")
    unit = e.unit_rows()

    def one_block(bounds):
        start, stop = bounds
        sims = unit[start:stop] @ unit.T
        counts = np.zeros(bins, dtype=np.int64)
        _kernels.hist_accumulate(np.ascontiguousarray(sims.ravel()), -1.0, 1.0, counts)
        return counts

    blocks = list(_blocks(e.t_number))
    workers = _worker_count(threads)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(one_block, blocks))
    else:
        partials = [one_block(b) for b in blocks]
    total = np.zeros(bins, dtype=np.int64)
    for p in partials:
        total += p
    return np.linspace(-1.0, 1.0, bins + 1), total


def _row_top(scores: np.ndarray, row: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices+values of the q largest entries of one row, self excluded.

    Ties break by token id ascending, exactly: candidates at or above the
    q-th value are gathered and lexsorted, so boundary ties never depend on
    partition order.
    """
    s = scores.copy()
    s[row] = -np.inf
    t = len(s)
    kth_value = np.partition(s, t - q)[t - q]
    cand = np.flatnonzero(s >= kth_value)
    order = np.lexsort((cand, -s[cand]))[:q]
    chosen = cand[order]
    return chosen, s[chosen]


def _csls_density(unit: np.ndarray, neighborhood: int, threads: int = 1) -> np.ndarray:
    """Mean cosine of each token to its `neighborhood` nearest others."""
    t = unit.shape[0]
    if neighborhood >= t:
        raise DataError("bad-csls-n", "neighborhood must be < t_number")
    out = np.empty(t, dtype=np.float64)

    def one_block(bounds):
        start, stop = bounds
        sims = unit[start:stop] @ unit.T
        for local in range(stop - start):
            row = sims[local]
            masked = row.copy()
            masked[start + local] = -np.inf
            top = np.partition(masked, t - neighborhood)[t - neighborhood :]
            out[start + local] = top.mean()

    blocks = list(_blocks(t))
    workers = _worker_count(threads)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(one_block, blocks))
    else:
        for b in blocks:
            one_block(b)
    return out


def csls_scores(
    e: EmbeddingMatrix,
    cfg: CslsConfig,
    i: int,
    density: np.ndarray | None = None,
) -> np.ndarray:
    """Density-corrected similarity row: 2*cos(i, j) - r(i) - r(j).

    r(x) is the mean cosine of x to its `neighborhood` nearest neighbors by
    plain cosine (self excluded).  Pass a precomputed `density` vector when
    scoring many rows.
    """
    unit = e.unit_rows()
    if density is None:
        density = _csls_density(unit, cfg.neighborhood)
    cos_row = unit[i] @ unit.T
    return 2.0 * cos_row - density[i] - density


def top_q_binarize(
    e: EmbeddingMatrix,
    q: int,
    csls: CslsConfig | None = None,
    threads: int = 1,
) -> BinaryMatrix:
    """Per row, keep directed edges to the q best-scoring other tokens.

    Plain cosine by default; with `csls`, the density-corrected score is the
    drop-in row scorer.  The result is generally asymmetric; feed it through
    the mutual-link adjacency to get symmetric clusters.
    """
    t = e.t_number
    if not (1 <= q < t):
        raise DataError("bad-q", "need 1 <= q < t_number")
    unit = e.unit_rows()
    density = _csls_density(unit, csls.neighborhood, threads=threads) if csls else None

    def one_block(bounds):
        start, stop = bounds
        sims = unit[start:stop] @ unit.T
        if density is not None:
            sims = 2.0 * sims - density[start:stop, None] - density[None, :]
        rows = np.empty((stop - start) * q, dtype=np.int64)
        cols = np.empty((stop - start) * q, dtype=np.int64)
        for local in range(stop - start):
            chosen, _ = _row_top(sims[local], start + local, q)
            rows[local * q : (local + 1) * q] = start + local
            cols[local * q : (local + 1) * q] = np.sort(chosen)
        return rows, cols

    blocks = list(_blocks(t))
    workers = _worker_count(threads)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one_block, blocks))
    else:
        parts = [one_block(b) for b in blocks]
    rows = np.concatenate([p[0] for p in parts])
    cols = np.concatenate([p[1] for p in parts])
    return BinaryMatrix(t, rows, cols, top_q=q)


def top_k_similarity(
    e: EmbeddingMatrix,
    k: int,
    csls: CslsConfig | None = None,
    threads: int = 1,
) -> SimilarityRowTop:
    """Per token, its k highest-cosine partners with the cosine values."""
    t = e.t_number
    if not (1 <= k < t):
        raise DataError("bad-k", "need 1 <= k < t_number")
    unit = e.unit_rows()
    density = _csls_density(unit, csls.neighborhood, threads=threads) if csls else None
    per_token: dict[int, list[tuple[int, float]]] = {}
    for start, stop in _blocks(t):
        sims = unit[start:stop] @ unit.T
        if density is not None:
            sims = 2.0 * sims - density[start:stop, None] - density[None, :]
        for local in range(stop - start):
            chosen, vals = _row_top(sims[local], start + local, k)
            per_token[start + local] = [(int(c), float(v)) for c, v in zip(chosen, vals)]
    return SimilarityRowTop(k, per_token)


# fixed internal seed: the deflation start vector must not depend on the data
_ABTT_SEED = 0x41425454


def abtt(e: EmbeddingMatrix, cfg: AbttConfig) -> EmbeddingMatrix:
    """Remove the mean row and the top-r principal directions.

    Principal directions come from power iteration on the centered covariance
    with deflation after each component; a component is accepted once its
    relative eigen-residual ||C v - lambda v|| / lambda drops to `tolerance`,
    and failing to converge within `max_iterations` raises with the offending
    component index.
    """
    if cfg.r >= e.e_length:
        raise DataError("bad-abtt-r", "r must be < e_length")
    x = e.vectors - e.vectors.mean(axis=0, keepdims=True)
    if cfg.r == 0:
        return EmbeddingMatrix(x)
    cov = x.T @ x
    rng = CounterRng(_ABTT_SEED)
    out = x.copy()
    for comp in range(cfg.r):
        v = rng.normals(cov.shape[0], start=comp * cov.shape[0])
        v /= np.linalg.norm(v)
        converged = False
        for _ in range(cfg.max_iterations):
            w = cov @ v
            norm = np.linalg.norm(w)
            if norm == 0.0:
                raise DataError(
                    "abtt-no-convergence", f"component {comp}: covariance annihilated the iterate"
                )
            v = w / norm
            eigenvalue = float(v @ cov @ v)
            residual = np.linalg.norm(cov @ v - eigenvalue * v)
            if eigenvalue > 0 and residual / eigenvalue <= cfg.tolerance:
                converged = True
                break
        if not converged:
            raise DataError(
                "abtt-no-convergence",
                f"component {comp}: no convergence in {cfg.max_iterations} iterations",
            )
        eigenvalue = float(v @ cov @ v)
        out -= np.outer(out @ v, v)
        cov -= eigenvalue * np.outer(v, v)
    return EmbeddingMatrix(out)
