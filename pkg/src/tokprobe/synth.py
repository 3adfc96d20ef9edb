"""Seeded generators of synthetic data with planted, exactly-known structure.

Every generator returns (data, truth): the truth dict carries the planted
ground facts (per-token correctness probabilities, cluster partitions, block
layouts, noise counts) so tests assert against it instead of re-deriving.
Identical seeds reproduce identical data bit for bit; see `rng` for the
counter-based stream construction that makes this portable.

Stream-id layout per seed (disjoint ranges per generator):
events 0-5, embeddings 1000-1001, field matrices 2000+3*unit,
isotropic embeddings 800000-800001, classified inputs 900000-900002.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rng import CounterRng
from .types import (
    ClassifiedInput,
    CorpusConfig,
    DataError,
    EmbeddingMatrix,
    EventLog,
    LabelFieldMatrix,
    UnitKind,
)


def zipf_profile(t_number: int, exponent: float = 1.0) -> np.ndarray:
    """Heavy-tailed token popularity: weight(t) = (t+1)^-exponent."""
    return (np.arange(1, t_number + 1, dtype=np.float64)) ** (-exponent)


@dataclass
class PlantedSpec:
    """Ground truth for event generation.

    p_correct may be a scalar or a per-token array; errors land inside the
    token's planted cluster with probability p_within (uniform over the other
    members) and otherwise uniformly over the rest of the vocabulary.  A token
    outside every planted cluster, or alone in one, has no within-cluster
    target: when the within branch is drawn its prediction stays correct, so
    its effective correctness probability rises accordingly (reported in the
    truth dict).
    """

    seed: int
    t_number: int
    planted_clusters: list[list[int]] = field(default_factory=list)
    p_correct: float | np.ndarray = 1.0
    p_within: float = 0.0
    frequency_profile: np.ndarray | None = None

    def __post_init__(self):
        seen: set[int] = set()
        for members in self.planted_clusters:
            for t in members:
                if not (0 <= t < self.t_number):
                    raise DataError("index-out-of-range", f"planted token {t} out of range")
                if t in seen:
                    raise DataError("overlapping-clusters", f"token {t} in two planted clusters")
                seen.add(t)
        if not (0.0 <= self.p_within <= 1.0):
            raise DataError("bad-p-within", "p_within must lie in [0, 1]")
        if self.frequency_profile is None:
            self.frequency_profile = zipf_profile(self.t_number)
        self.frequency_profile = np.asarray(self.frequency_profile, dtype=np.float64)
        if self.frequency_profile.shape != (self.t_number,):
            raise DataError("shape-mismatch", "frequency profile needs one weight per token")
        if (self.frequency_profile <= 0).any():
            raise DataError("bad-profile", "frequency weights must be positive")

    def p_correct_array(self) -> np.ndarray:
        p = np.broadcast_to(np.asarray(self.p_correct, dtype=np.float64), (self.t_number,))
        if (p < 0).any() or (p > 1).any():
            raise DataError("bad-p-correct", "correctness probabilities must lie in [0, 1]")
        return np.array(p)

    def partition(self) -> list[list[int]]:
        """Planted clusters plus singletons for every uncovered token."""
        covered = {t for members in self.planted_clusters for t in members}
        out = [sorted(members) for members in self.planted_clusters]
        out.extend([t] for t in range(self.t_number) if t not in covered)
        return out


def _cluster_tables(spec: PlantedSpec):
    """Flat member table plus per-token (cluster start, size, rank) lookups."""
    t = spec.t_number
    start = np.zeros(t, dtype=np.int64)
    size = np.zeros(t, dtype=np.int64)
    rank = np.zeros(t, dtype=np.int64)
    flat: list[int] = []
    for members in spec.planted_clusters:
        members = sorted(members)
        s = len(flat)
        for r, tok in enumerate(members):
            start[tok] = s
            size[tok] = len(members)
            rank[tok] = r
        flat.extend(members)
    return np.asarray(flat, dtype=np.int64), start, size, rank


def gen_events(
    spec: PlantedSpec,
    n_events: int,
    corpus: CorpusConfig | None = None,
) -> tuple[EventLog, dict]:
    """Draw events with the planted confusion structure."""
    if n_events <= 0:
        raise DataError("bad-n-events", "n_events must be positive")
    corpus = corpus or CorpusConfig()
    t = spec.t_number
    p_correct = spec.p_correct_array()
    flat, start, size, rank = _cluster_tables(spec)

    token_rng = CounterRng(spec.seed, 0)
    kind_rng = CounterRng(spec.seed, 1)
    pos_rng = CounterRng(spec.seed, 2)
    correct_rng = CounterRng(spec.seed, 3)
    within_rng = CounterRng(spec.seed, 4)
    err_rng = CounterRng(spec.seed, 5)

    cum = np.cumsum(spec.frequency_profile)
    cum /= cum[-1]
    true_tokens = np.searchsorted(cum, token_rng.uniforms(n_events), side="right")
    np.minimum(true_tokens, t - 1, out=true_tokens)

    u_kind = kind_rng.uniforms(n_events)
    c0, c1 = corpus.mask_split[0], corpus.mask_split[0] + corpus.mask_split[1]
    kinds = (u_kind >= c0).astype(np.uint8) + (u_kind >= c1).astype(np.uint8)

    positions = pos_rng.integers(n_events, corpus.n_input)
    events_per_input = max(1, round(corpus.mask_fraction * corpus.n_input))
    input_ids = np.arange(n_events, dtype=np.int64) // events_per_input

    correct = correct_rng.uniforms(n_events) < p_correct[true_tokens]
    has_mates = size[true_tokens] >= 2
    wants_within = within_rng.uniforms(n_events) < spec.p_within
    u_err = err_rng.uniforms(n_events)

    pred = true_tokens.copy()
    err = ~correct
    # within-cluster misses: uniform over the other members of the cluster
    within = err & wants_within & has_mates
    if within.any():
        tw = true_tokens[within]
        slot = np.floor(u_err[within] * (size[tw] - 1)).astype(np.int64)
        np.minimum(slot, size[tw] - 2, out=slot)
        slot += slot >= rank[tw]
        pred[within] = flat[start[tw] + slot]
    # within branch with no mates keeps the correct prediction (nowhere to go)
    outside = err & ~wants_within
    if outside.any():
        to = true_tokens[outside]
        j = np.floor(u_err[outside] * (t - 1)).astype(np.int64)
        np.minimum(j, t - 2, out=j)
        j += j >= to
        pred[outside] = j

    effective_p = p_correct + (1.0 - p_correct) * spec.p_within * (size < 2)
    log = EventLog(input_ids, positions, kinds, true_tokens, pred)
    truth = {
        "kind": "events",
        "seed": spec.seed,
        "t_number": t,
        "n_events": n_events,
        "planted_clusters": [sorted(map(int, m)) for m in spec.planted_clusters],
        "partition": spec.partition(),
        "p_correct": spec.p_correct_array().tolist(),
        "effective_p_correct": effective_p.tolist(),
        "p_within": spec.p_within,
    }
    return log, truth


def gen_embedding(
    spec: PlantedSpec,
    e_length: int,
    within_cos: float,
    between_cos_max: float,
) -> tuple[EmbeddingMatrix, dict]:
    """Planted-geometry embedding: clusters live in private 2-D planes.

    Cluster members walk a short arc inside their plane, so pairwise cosine
    within a cluster is cos(|step difference| * delta) >= within_cos, adjacent
    members are each other's nearest neighbors, and cross-cluster cosines are
    exactly zero before the (cosine-preserving) random rotation.
    """
    if not (within_cos > between_cos_max):
        raise DataError("bad-geometry", "within_cos must exceed between_cos_max")
    if not (0.0 <= between_cos_max) or within_cos > 1.0:
        raise DataError("bad-geometry", "cosine bounds must satisfy 0 <= between <= within <= 1")
    covered = {t for members in spec.planted_clusters for t in members}
    singles = [t for t in range(spec.t_number) if t not in covered]
    dims_needed = sum(2 if len(m) >= 2 else 1 for m in spec.planted_clusters) + len(singles)
    if dims_needed > e_length:
        raise DataError(
            "infeasible-geometry",
            f"need {dims_needed} private dimensions but e_length is {e_length}",
        )
    vectors = np.zeros((spec.t_number, e_length), dtype=np.float64)
    axis = 0
    for members in spec.planted_clusters:
        members = sorted(members)
        if len(members) == 1:
            vectors[members[0], axis] = 1.0
            axis += 1
            continue
        delta = np.arccos(within_cos) / (len(members) - 1)
        for step, tok in enumerate(members):
            vectors[tok, axis] = np.cos(step * delta)
            vectors[tok, axis + 1] = np.sin(step * delta)
        axis += 2
    for tok in singles:
        vectors[tok, axis] = 1.0
        axis += 1
    rot = _random_rotation(spec.seed, e_length)
    matrix = EmbeddingMatrix(vectors @ rot)
    truth = {
        "kind": "embedding",
        "seed": spec.seed,
        "t_number": spec.t_number,
        "e_length": e_length,
        "within_cos": within_cos,
        "between_cos_max": between_cos_max,
        "partition": spec.partition(),
    }
    return matrix, truth


def _random_rotation(seed: int, n: int) -> np.ndarray:
    rng = CounterRng(seed, 1000)
    gauss = rng.normals(n * n).reshape(n, n)
    q, r = np.linalg.qr(gauss)
    return q * np.sign(np.diag(r))


def gen_noise_embedding(seed: int, t_number: int, e_length: int) -> tuple[EmbeddingMatrix, dict]:
    """Isotropic Gaussian rows: the null model for similarity distributions."""
    rng = CounterRng(seed, 800000)
    vectors = rng.normals(t_number * e_length).reshape(t_number, e_length)
    truth = {
        "kind": "noise-embedding",
        "seed": seed,
        "t_number": t_number,
        "e_length": e_length,
        "offdiag_std": 1.0 / np.sqrt(e_length),
    }
    return EmbeddingMatrix(vectors), truth


def gen_fields(
    seed: int,
    n_units: int,
    n_labels: int,
    planted_blocks: list[list[list[int]]],
    noise_rate: float,
    unit: UnitKind = UnitKind.NODE,
    block_range: tuple[float, float] = (0.75, 1.0),
    background_range: tuple[float, float] = (0.01, 0.40),
    threshold: float = 0.6,
) -> tuple[list[LabelFieldMatrix], dict]:
    """Field matrices with planted diagonal blocks and off-block noise cells.

    `planted_blocks[u]` lists the disjoint label sets of unit u.  Block cells
    (rows x cols over one label set) draw from block_range, the background
    from background_range, and noise cells — placed on block rows but
    non-block columns so they can neither join the matching nor merge
    clusters — appear with expected count `noise_rate` per unit.  The ranges
    must keep background strictly below and blocks strictly above the clip
    threshold after division by the matrix maximum.
    """
    if len(planted_blocks) != n_units:
        raise DataError("shape-mismatch", "need one block list per unit")
    if background_range[1] >= threshold * block_range[0]:
        raise DataError(
            "bad-ranges", "background can cross the threshold once normalized by the block max"
        )
    matrices = []
    truth_units = []
    for u, blocks in enumerate(planted_blocks):
        labels_used: set[int] = set()
        for members in blocks:
            for lab in members:
                if not (0 <= lab < n_labels):
                    raise DataError("index-out-of-range", f"unit {u}: label {lab} out of range")
                if lab in labels_used:
                    raise DataError("overlapping-blocks", f"unit {u}: label {lab} in two blocks")
                labels_used.add(lab)
        bg_rng = CounterRng(seed, 2000 + 3 * u)
        block_rng = CounterRng(seed, 2000 + 3 * u + 1)
        noise_rng = CounterRng(seed, 2000 + 3 * u + 2)
        lo, hi = background_range
        values = lo + (hi - lo) * bg_rng.uniforms(n_labels * n_labels).reshape(
            n_labels, n_labels
        )
        blo, bhi = block_range
        draw_at = 0
        for members in blocks:
            members = sorted(members)
            cells = block_rng.uniforms(len(members) ** 2, start=draw_at)
            draw_at += len(members) ** 2
            values[np.ix_(members, members)] = (blo + (bhi - blo) * cells).reshape(
                len(members), len(members)
            )
        block_rows = sorted(labels_used)
        other_cols = [c for c in range(n_labels) if c not in labels_used]
        noise_cells = []
        if noise_rate > 0 and block_rows and other_cols:
            # one noise cell per column at most: stacked columns would let an
            # alternative maximum matching absorb cells and beat the planted
            # noise count, breaking the ground truth
            p_col = min(1.0, noise_rate / len(other_cols))
            n_cols = len(other_cols)
            hits = noise_rng.uniforms(n_cols) < p_col
            row_picks = noise_rng.integers(n_cols, len(block_rows), start=n_cols)
            vals = blo + (bhi - blo) * noise_rng.uniforms(n_cols, start=2 * n_cols)
            for k, c in enumerate(other_cols):
                if hits[k]:
                    r = block_rows[int(row_picks[k])]
                    values[r, c] = vals[k]
                    noise_cells.append((r, c))
        matrices.append(LabelFieldMatrix(unit, u, values))
        truth_units.append(
            {
                "blocks": [sorted(map(int, m)) for m in blocks],
                "diag": sum(len(m) for m in blocks),
                "n_c": len(blocks),
                "noise": len(noise_cells),
                "noise_cells": noise_cells,
            }
        )
    truth = {
        "kind": "fields",
        "seed": seed,
        "n_units": n_units,
        "n_labels": n_labels,
        "noise_rate": noise_rate,
        "threshold": threshold,
        "units": truth_units,
    }
    return matrices, truth


def gen_inputs(
    seed: int,
    n_inputs: int,
    tokens_per_input: int,
    t_number: int,
    n_labels: int,
    accuracy: float,
    frequency_profile: np.ndarray | None = None,
) -> tuple[list[ClassifiedInput], dict]:
    """Classified inputs whose correctness is independent of their tokens."""
    if n_inputs <= 0 or tokens_per_input <= 0:
        raise DataError("bad-shape", "need positive input and token counts")
    if not (0.0 <= accuracy <= 1.0):
        raise DataError("bad-accuracy", "accuracy must lie in [0, 1]")
    profile = zipf_profile(t_number) if frequency_profile is None else frequency_profile
    cum = np.cumsum(np.asarray(profile, dtype=np.float64))
    cum /= cum[-1]
    tok_rng = CounterRng(seed, 900000)
    label_rng = CounterRng(seed, 900001)
    flip_rng = CounterRng(seed, 900002)
    tokens = np.searchsorted(cum, tok_rng.uniforms(n_inputs * tokens_per_input), side="right")
    np.minimum(tokens, t_number - 1, out=tokens)
    tokens = tokens.reshape(n_inputs, tokens_per_input)
    true_labels = label_rng.integers(n_inputs, n_labels)
    correct = flip_rng.uniforms(n_inputs) < accuracy
    wrong_shift = 1 + flip_rng.integers(n_inputs, max(1, n_labels - 1), start=n_inputs)
    pred_labels = np.where(correct, true_labels, (true_labels + wrong_shift) % n_labels)
    inputs = [
        ClassifiedInput(i, tuple(int(t) for t in tokens[i]), int(true_labels[i]), int(pred_labels[i]))
        for i in range(n_inputs)
    ]
    truth = {
        "kind": "inputs",
        "seed": seed,
        "n_inputs": n_inputs,
        "tokens_per_input": tokens_per_input,
        "t_number": t_number,
        "n_labels": n_labels,
        "accuracy": accuracy,
    }
    return inputs, truth


def random_blocks(
    seed: int,
    n_units: int,
    n_labels: int,
    block_count_choices: list[int],
    block_size_choices: list[int],
) -> list[list[list[int]]]:
    """Random disjoint label blocks per unit (helper for planted field runs)."""
    count_rng = CounterRng(seed, 3000)
    size_rng = CounterRng(seed, 3001)
    pick_rng = CounterRng(seed, 3002)
    counts = count_rng.integers(n_units, len(block_count_choices))
    out = []
    size_at = 0
    pick_at = 0
    for u in range(n_units):
        n_blocks = block_count_choices[int(counts[u])]
        sizes = size_rng.integers(n_blocks, len(block_size_choices), start=size_at)
        size_at += n_blocks
        blocks = []
        used: set[int] = set()
        for b in range(n_blocks):
            want = block_size_choices[int(sizes[b])]
            members = []
            while len(members) < want:
                cand = int(pick_rng.integers(1, n_labels, start=pick_at)[0])
                pick_at += 1
                if cand not in used:
                    used.add(cand)
                    members.append(cand)
            blocks.append(sorted(members))
        out.append(blocks)
    return out
