"""Per-token prediction accuracy and its summaries.

APT(t) = correct predictions of token t / times t was selected for
modification; the unweighted mean over all tokens selected at least once is
the global quality measure.  Tokens never selected have no defined ratio and
are excluded from every average (the choice is recorded in output metadata).
"""

from __future__ import annotations

import numpy as np

from .types import ClusterSet, DataError, EventLog, MaskEvent, MaskKind, Vocab


class AptTable:
    """Selected/correct counts and the accuracy ratio per covered token."""

    def __init__(self, t_number: int, selected: np.ndarray, correct: np.ndarray):
        selected = np.asarray(selected, dtype=np.int64)
        correct = np.asarray(correct, dtype=np.int64)
        if selected.shape != (t_number,) or correct.shape != (t_number,):
            raise DataError("shape-mismatch", "need one selected/correct count per token")
        if (correct > selected).any() or (correct < 0).any():
            raise DataError("bad-counts", "need 0 <= correct <= selected per token")
        self.t_number = int(t_number)
        self.selected = selected
        self.correct = correct
        self.covered_ids = np.flatnonzero(selected > 0)

    @classmethod
    def from_counts(cls, counts: dict[int, tuple[int, int]], t_number: int) -> "AptTable":
        selected = np.zeros(t_number, dtype=np.int64)
        correct = np.zeros(t_number, dtype=np.int64)
        for tid, (sel, cor) in counts.items():
            selected[tid] = sel
            correct[tid] = cor
        return cls(t_number, selected, correct)

    @property
    def covered_tokens(self) -> int:
        return len(self.covered_ids)

    def apt(self, token: int) -> float:
        if self.selected[token] == 0:
            raise DataError("token-not-covered", f"token {token} was never selected")
        return self.correct[token] / self.selected[token]

    def apt_values(self) -> np.ndarray:
        """APT per covered token, aligned with covered_ids."""
        ids = self.covered_ids
        return self.correct[ids] / self.selected[ids]

    @property
    def mean_apt(self) -> float:
        if self.covered_tokens == 0:
            raise DataError("empty-events", "no token was ever selected")
        return float(self.apt_values().mean())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, AptTable)
            and self.t_number == other.t_number
            and np.array_equal(self.selected, other.selected)
            and np.array_equal(self.correct, other.correct)
        )


def compute_apt(
    events: EventLog | "list[MaskEvent]",
    vocab: Vocab,
    masked_only: bool = False,
) -> AptTable:
    """Count selections and correct predictions per true token.

    All three modification kinds count; `masked_only` restricts to MASKED
    events for sensitivity studies.
    """
    log = events if isinstance(events, EventLog) else EventLog.from_events(events)
    log.validate_tokens(vocab)
    true_tokens = log.true_tokens
    pred_tokens = log.pred_tokens
    if masked_only:
        keep = log.kinds == int(MaskKind.MASKED)
        true_tokens = true_tokens[keep]
        pred_tokens = pred_tokens[keep]
    if len(true_tokens) == 0:
        raise DataError("empty-events", "event stream selects no token")
    t = vocab.t_number
    selected = np.bincount(true_tokens, minlength=t)
    correct = np.bincount(true_tokens[pred_tokens == true_tokens], minlength=t)
    return AptTable(t, selected, correct)


def _frequency_order(apt: AptTable, vocab: Vocab) -> np.ndarray:
    """Covered tokens ordered by corpus frequency descending, id ascending."""
    ids = apt.covered_ids
    freqs = vocab.frequencies[ids]
    order = np.lexsort((ids, -freqs))
    return ids[order]


def group_apt(apt: AptTable, vocab: Vocab, n_groups: int) -> list[tuple[int, float]]:
    """Split frequency-ordered covered tokens into contiguous groups.

    Groups are as equal as possible (the first `remainder` groups get one
    extra token); each group reports its unweighted mean APT.
    """
    if n_groups < 1:
        raise DataError("bad-groups", "n_groups must be >= 1")
    n = apt.covered_tokens
    if n_groups > n:
        raise DataError("bad-groups", f"n_groups {n_groups} exceeds covered tokens {n}")
    ordered = _frequency_order(apt, vocab)
    values = apt.correct[ordered] / apt.selected[ordered]
    base, rem = divmod(n, n_groups)
    out = []
    start = 0
    for g in range(n_groups):
        size = base + (1 if g < rem else 0)
        out.append((g, float(values[start : start + size].mean())))
        start += size
    return out


def top_apt(apt: AptTable, k: int) -> float:
    """Mean APT of the k highest-APT tokens (ties by token id ascending)."""
    if k <= 0:
        raise DataError("bad-k", "k must be positive")
    if k > apt.covered_tokens:
        raise DataError("bad-k", f"k {k} exceeds covered tokens {apt.covered_tokens}")
    ids = apt.covered_ids
    values = apt.apt_values()
    order = np.lexsort((ids, -values))
    return float(values[order[:k]].mean())


def apt_by_cluster(
    apt: AptTable,
    clusters: ClusterSet,
    bins: int = 20,
) -> tuple[float | None, float | None, np.ndarray, np.ndarray, np.ndarray]:
    """Split APT means between unity clusters and larger clusters.

    Returns (mean over size-1 cluster tokens, mean over size>1 cluster tokens,
    bin edges, unity histogram, multi histogram).  A side with no tokens
    reports None.
    """
    unity, multi = [], []
    for members in clusters.clusters:
        bucket = unity if len(members) == 1 else multi
        for t in members:
            t = int(t)
            if apt.selected[t] == 0:
                raise DataError("token-not-covered", f"cluster token {t} missing from APT table")
            bucket.append(apt.correct[t] / apt.selected[t])
    edges = np.linspace(0.0, 1.0, bins + 1)
    unity_hist = np.histogram(unity, bins=edges)[0] if unity else np.zeros(bins, dtype=np.int64)
    multi_hist = np.histogram(multi, bins=edges)[0] if multi else np.zeros(bins, dtype=np.int64)
    mean_unity = float(np.mean(unity)) if unity else None
    mean_multi = float(np.mean(multi)) if multi else None
    return mean_unity, mean_multi, edges, unity_hist.astype(np.int64), multi_hist.astype(np.int64)
