"""Shared domain types and their invariants.

Everything here is immutable after construction (arrays are set read-only),
so values can be shared freely across threads; builders are single-writer.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Iterator, Sequence

import numpy as np


class DataError(ValueError):
    """Invalid input data. `code` is a stable machine-readable slug."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class FormatError(DataError):
    """Malformed file content (carries location detail in the message)."""


class InvariantError(RuntimeError):
    """An internal invariant was violated; indicates a bug, not bad input."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a.setflags(write=False)
    return a


class MaskKind(IntEnum):
    MASKED = 0
    REPLACED = 1
    UNCHANGED = 2


KIND_NAMES = {k: k.name for k in MaskKind}
KIND_BY_NAME = {k.name: k for k in MaskKind}


class Vocab:
    """Token-id <-> token-text table with corpus appearance frequencies.

    Token ids are dense: exactly 0..t_number-1, each once.
    """

    def __init__(self, texts: Sequence[str], frequencies: np.ndarray):
        if len(texts) == 0:
            raise DataError("empty-vocab", "vocabulary must be nonempty")
        freqs = np.asarray(frequencies, dtype=np.int64)
        if freqs.shape != (len(texts),):
            raise DataError("shape-mismatch", "one frequency per token required")
        if (freqs < 0).any():
            bad = int(np.argmax(freqs < 0))
            raise DataError("negative-frequency", f"token id {bad} has negative frequency")
        self.texts = list(texts)
        self.frequencies = _frozen(freqs)

    @property
    def t_number(self) -> int:
        return len(self.texts)

    def entries(self) -> Iterator[tuple[int, str, int]]:
        for i, text in enumerate(self.texts):
            yield i, text, int(self.frequencies[i])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Vocab)
            and self.texts == other.texts
            and np.array_equal(self.frequencies, other.frequencies)
        )

    def __repr__(self) -> str:
        return f"Vocab(t_number={self.t_number})"


def validate_vocab(entries: Iterable[tuple[int, str, int]]) -> Vocab:
    """Check a raw (id, text, frequency) table and build a Vocab.

    Ids must be dense 0..n-1 with no duplicates; frequencies non-negative.
    """
    rows = list(entries)
    if not rows:
        raise DataError("empty-vocab", "vocabulary must be nonempty")
    n = len(rows)
    texts = [""] * n
    freqs = np.zeros(n, dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    for tid, text, freq in rows:
        tid = int(tid)
        if tid < 0 or tid >= n:
            raise DataError("gap-in-range", f"token id {tid} outside dense range 0..{n - 1}")
        if seen[tid]:
            raise DataError("duplicate-id", f"token id {tid} appears more than once")
        seen[tid] = True
        if freq < 0:
            raise DataError("negative-frequency", f"token id {tid} has negative frequency {freq}")
        texts[tid] = text
        freqs[tid] = freq
    if not seen.all():
        missing = int(np.argmin(seen))
        raise DataError("gap-in-range", f"token id {missing} missing from dense range")
    return Vocab(texts, freqs)


@dataclass(frozen=True)
class CorpusConfig:
    """Protocol parameters for masked-token test runs."""

    n_input: int = 128
    e_length: int = 768
    w_s: int = 90_000
    w_test: int = 90_000
    repetitions: int = 30
    mask_fraction: float = 0.15
    mask_split: tuple[float, float, float] = (0.8, 0.1, 0.1)

    def __post_init__(self):
        if not (0.0 < self.mask_fraction <= 1.0):
            raise DataError("bad-mask-fraction", "mask_fraction must lie in (0, 1]")
        if any(p < 0 for p in self.mask_split):
            raise DataError("bad-mask-split", "mask_split components must be non-negative")
        if abs(sum(self.mask_split) - 1.0) > 1e-9:
            raise DataError("bad-mask-split", "mask_split must sum to 1 within 1e-9")


@dataclass(frozen=True)
class MaskEvent:
    """One modified position: what the token was and what was predicted."""

    input_id: int
    position: int
    kind: MaskKind
    true_token: int
    pred_token: int


class EventLog:
    """Column-oriented event storage; the fast path for bulk analytics.

    Counts are kept as 64-bit integers throughout: repetitions x w_test can
    exceed 32-bit ranges.
    """

    def __init__(self, input_ids, positions, kinds, true_tokens, pred_tokens):
        self.input_ids = _frozen(np.asarray(input_ids, dtype=np.int64))
        self.positions = _frozen(np.asarray(positions, dtype=np.int64))
        self.kinds = _frozen(np.asarray(kinds, dtype=np.uint8))
        self.true_tokens = _frozen(np.asarray(true_tokens, dtype=np.int64))
        self.pred_tokens = _frozen(np.asarray(pred_tokens, dtype=np.int64))
        n = len(self.input_ids)
        for a in (self.positions, self.kinds, self.true_tokens, self.pred_tokens):
            if len(a) != n:
                raise DataError("shape-mismatch", "event columns must have equal length")
        if len(self.kinds) and self.kinds.max() > max(MaskKind):
            raise DataError("bad-kind", "unknown modification kind code")

    @classmethod
    def from_events(cls, events: Iterable[MaskEvent]) -> "EventLog":
        rows = list(events)
        return cls(
            [e.input_id for e in rows],
            [e.position for e in rows],
            [int(e.kind) for e in rows],
            [e.true_token for e in rows],
            [e.pred_token for e in rows],
        )

    def validate_tokens(self, vocab: Vocab) -> None:
        for name, col in (("true", self.true_tokens), ("pred", self.pred_tokens)):
            if len(col) and (col.min() < 0 or col.max() >= vocab.t_number):
                raise DataError(
                    "token-out-of-range",
                    f"{name}-token id outside vocabulary of size {vocab.t_number}",
                )

    def __len__(self) -> int:
        return len(self.input_ids)

    def __iter__(self) -> Iterator[MaskEvent]:
        for i in range(len(self)):
            yield MaskEvent(
                int(self.input_ids[i]),
                int(self.positions[i]),
                MaskKind(int(self.kinds[i])),
                int(self.true_tokens[i]),
                int(self.pred_tokens[i]),
            )

    def __eq__(self, other) -> bool:
        return isinstance(other, EventLog) and all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("input_ids", "positions", "kinds", "true_tokens", "pred_tokens")
        )


class ConfusionMatrix:
    """Sparse square count matrix over tokens; zero cells are absent.

    Stored as (rows, cols, counts) triplets sorted by (row, col).
    """

    def __init__(self, t_number: int, rows, cols, counts):
        self.t_number = int(t_number)
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        counts = np.asarray(counts, dtype=np.int64)
        if not (len(rows) == len(cols) == len(counts)):
            raise DataError("shape-mismatch", "triplet arrays must have equal length")
        if len(rows):
            if rows.min() < 0 or rows.max() >= self.t_number:
                raise DataError("index-out-of-range", "row index outside [0, t_number)")
            if cols.min() < 0 or cols.max() >= self.t_number:
                raise DataError("index-out-of-range", "column index outside [0, t_number)")
            if (counts <= 0).any():
                raise DataError("nonpositive-count", "stored counts must be > 0")
            keys = rows * self.t_number + cols
            if (np.diff(keys) <= 0).any():
                raise DataError("unsorted-triplets", "triplets must ascend by (row, col) uniquely")
        self.rows = _frozen(rows)
        self.cols = _frozen(cols)
        self.counts = _frozen(counts)

    @classmethod
    def from_dict(cls, t_number: int, cells: dict[tuple[int, int], int]) -> "ConfusionMatrix":
        items = sorted(cells.items())
        rows = [r for (r, _), _ in items]
        cols = [c for (_, c), _ in items]
        counts = [v for _, v in items]
        return cls(t_number, rows, cols, counts)

    def to_dict(self) -> dict[tuple[int, int], int]:
        return {
            (int(r), int(c)): int(v)
            for r, c, v in zip(self.rows, self.cols, self.counts)
        }

    @property
    def nnz(self) -> int:
        return len(self.counts)

    def row_slice(self, token: int) -> tuple[np.ndarray, np.ndarray]:
        """(columns, counts) of one row."""
        lo = np.searchsorted(self.rows, token, side="left")
        hi = np.searchsorted(self.rows, token, side="right")
        return self.cols[lo:hi], self.counts[lo:hi]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ConfusionMatrix)
            and self.t_number == other.t_number
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.counts, other.counts)
        )

    def __repr__(self) -> str:
        return f"ConfusionMatrix(t_number={self.t_number}, nnz={self.nnz})"


class NormalizedConfusion:
    """Confusion rows divided by their diagonal count.

    Rows whose diagonal count is zero or beaten by an off-diagonal count are
    excluded (a tie keeps the row: the diagonal is still jointly maximal).
    Every retained row has its diagonal entry exactly 1.0.
    """

    def __init__(self, t_number, rows, cols, values, excluded, basis=None):
        self.t_number = int(t_number)
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if len(rows):
            keys = rows * self.t_number + cols
            if (np.diff(keys) <= 0).any():
                raise InvariantError("normalized rows must ascend by (row, col)")
            diag = values[rows == cols]
            if not np.all(diag == 1.0):
                raise InvariantError("retained diagonal entries must equal exactly 1.0")
        self.rows = _frozen(rows)
        self.cols = _frozen(cols)
        self.values = _frozen(values)
        self.excluded = _frozen(np.asarray(sorted(excluded), dtype=np.int64))
        self.basis = basis
        self.retained = _frozen(np.unique(rows))

    def row_slice(self, token: int) -> tuple[np.ndarray, np.ndarray]:
        lo = np.searchsorted(self.rows, token, side="left")
        hi = np.searchsorted(self.rows, token, side="right")
        return self.cols[lo:hi], self.values[lo:hi]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, NormalizedConfusion)
            and self.t_number == other.t_number
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.excluded, other.excluded)
        )


class BinaryMatrix:
    """Sparse 0/1 matrix with recorded provenance: a threshold or a top-q."""

    def __init__(self, t_number, rows, cols, threshold=None, top_q=None):
        if (threshold is None) == (top_q is None):
            raise DataError("bad-provenance", "exactly one of threshold/top_q must be set")
        self.t_number = int(t_number)
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if len(rows):
            if rows.min() < 0 or rows.max() >= self.t_number:
                raise DataError("index-out-of-range", "row index outside [0, t_number)")
            if cols.min() < 0 or cols.max() >= self.t_number:
                raise DataError("index-out-of-range", "column index outside [0, t_number)")
            keys = rows * self.t_number + cols
            if (np.diff(keys) <= 0).any():
                raise DataError("unsorted-triplets", "edges must ascend by (row, col) uniquely")
        self.rows = _frozen(rows)
        self.cols = _frozen(cols)
        self.threshold = None if threshold is None else float(threshold)
        self.top_q = None if top_q is None else int(top_q)

    @property
    def n_edges(self) -> int:
        return len(self.rows)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BinaryMatrix)
            and self.t_number == other.t_number
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and self.threshold == other.threshold
            and self.top_q == other.top_q
        )


class AdjacencyMatrix:
    """Symmetric connectivity as unordered token pairs (stored with i < j)."""

    def __init__(self, t_number: int, firsts, seconds):
        self.t_number = int(t_number)
        firsts = np.asarray(firsts, dtype=np.int64)
        seconds = np.asarray(seconds, dtype=np.int64)
        if len(firsts) != len(seconds):
            raise DataError("shape-mismatch", "pair arrays must have equal length")
        if len(firsts):
            if (firsts >= seconds).any():
                raise InvariantError("pairs must be stored with first < second")
            if firsts.min() < 0 or seconds.max() >= self.t_number:
                raise DataError("index-out-of-range", "pair index outside [0, t_number)")
            keys = firsts * self.t_number + seconds
            if (np.diff(keys) <= 0).any():
                raise DataError("unsorted-triplets", "pairs must ascend uniquely")
        self.firsts = _frozen(firsts)
        self.seconds = _frozen(seconds)

    @classmethod
    def from_pairs(cls, t_number: int, pairs: Iterable[tuple[int, int]]) -> "AdjacencyMatrix":
        canon = sorted({(min(i, j), max(i, j)) for i, j in pairs if i != j})
        return cls(t_number, [p[0] for p in canon], [p[1] for p in canon])

    @property
    def n_edges(self) -> int:
        return len(self.firsts)

    def pair_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in zip(self.firsts, self.seconds)}

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, AdjacencyMatrix)
            and self.t_number == other.t_number
            and np.array_equal(self.firsts, other.firsts)
            and np.array_equal(self.seconds, other.seconds)
        )


class ClusterSet:
    """A partition of the participating tokens into connected groups.

    Canonical order: clusters by (size descending, smallest member ascending);
    members ascending within each cluster.  Singletons ("unity clusters")
    are included.
    """

    def __init__(self, clusters: Sequence[Sequence[int]]):
        canon = []
        for members in clusters:
            arr = np.asarray(sorted(int(m) for m in members), dtype=np.int64)
            if len(arr) == 0:
                raise DataError("empty-cluster", "clusters must have size >= 1")
            canon.append(arr)
        canon.sort(key=lambda a: (-len(a), int(a[0])))
        self.clusters = [_frozen(a) for a in canon]
        membership: dict[int, int] = {}
        for idx, arr in enumerate(self.clusters):
            for t in arr:
                t = int(t)
                if t in membership:
                    raise DataError("not-a-partition", f"token {t} in more than one cluster")
                membership[t] = idx
        self.membership = membership

    @property
    def n_tokens(self) -> int:
        return sum(len(c) for c in self.clusters)

    def sizes(self) -> list[int]:
        return [len(c) for c in self.clusters]

    def __len__(self) -> int:
        return len(self.clusters)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ClusterSet)
            and len(self.clusters) == len(other.clusters)
            and all(np.array_equal(a, b) for a, b in zip(self.clusters, other.clusters))
        )


class EmbeddingMatrix:
    """Dense token-vector table, one row per token; zero rows are rejected."""

    def __init__(self, vectors: np.ndarray):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise DataError("shape-mismatch", "embedding must be a 2-D matrix")
        norms = np.linalg.norm(vectors, axis=1)
        if (norms == 0.0).any():
            bad = int(np.argmax(norms == 0.0))
            raise DataError("zero-row", f"token id {bad} has an all-zero vector")
        self.vectors = _frozen(vectors)

    @property
    def t_number(self) -> int:
        return self.vectors.shape[0]

    @property
    def e_length(self) -> int:
        return self.vectors.shape[1]

    def unit_rows(self) -> np.ndarray:
        return self.vectors / np.linalg.norm(self.vectors, axis=1, keepdims=True)

    def __eq__(self, other) -> bool:
        return isinstance(other, EmbeddingMatrix) and np.array_equal(self.vectors, other.vectors)


class UnitKind(IntEnum):
    NODE = 0
    HEAD = 1


class LabelFieldMatrix:
    """Per-unit label-by-label mean-field matrix (one probed node or head)."""

    def __init__(self, unit: UnitKind, unit_index: int, values: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise DataError("shape-mismatch", "field matrix must be square")
        self.unit = UnitKind(unit)
        self.unit_index = int(unit_index)
        self.values = _frozen(values)

    @property
    def n_labels(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LabelFieldMatrix)
            and self.unit == other.unit
            and self.unit_index == other.unit_index
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class ClassifiedInput:
    """A classified token sequence with its true and predicted label."""

    input_id: int
    tokens: tuple[int, ...]
    true_label: int
    pred_label: int

    def __post_init__(self):
        if self.true_label < 0 or self.pred_label < 0:
            raise DataError("bad-label", "labels must be non-negative")
