"""Per-bin classification confidence over classified inputs.

Inputs are grouped by the mean APT of their tokens (linear bins) or by the
mean corpus frequency of their tokens (logarithmic bins); each bin reports
correct / (correct + incorrect).  Bins are half-open [lower, upper): a value
on a boundary always goes to the upper bin.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .apt import AptTable
from .types import ClassifiedInput, DataError, Vocab


class BinAxis(Enum):
    APT_AVE = "apt_ave"
    FREQ_AVE = "freq_ave"


@dataclass(frozen=True)
class ConfidenceBin:
    lower: float
    upper: float
    n_correct: int
    n_incorrect: int

    @property
    def total(self) -> int:
        return self.n_correct + self.n_incorrect

    @property
    def confidence(self) -> float | None:
        if self.total == 0:
            return None
        return self.n_correct / self.total


@dataclass(frozen=True)
class ConfidenceBins:
    axis: BinAxis
    bins: tuple[ConfidenceBin, ...]

    @property
    def n_binned(self) -> int:
        return sum(b.total for b in self.bins)

    @property
    def global_confidence(self) -> float | None:
        correct = sum(b.n_correct for b in self.bins)
        total = self.n_binned
        return None if total == 0 else correct / total


def apt_ave(inp: ClassifiedInput, apt: AptTable) -> float | None:
    """Unweighted mean APT over the input's tokens.

    Tokens missing from the APT table are skipped (zero-filling would invent
    evidence); returns None when every token is missing.
    """
    if len(inp.tokens) == 0:
        raise DataError("empty-input", f"input {inp.input_id} has no tokens")
    total = 0.0
    n = 0
    for t in inp.tokens:
        if t < 0 or t >= apt.t_number:
            raise DataError("token-out-of-range", f"input {inp.input_id}: token {t}")
        if apt.selected[t] > 0:
            total += apt.correct[t] / apt.selected[t]
            n += 1
    return None if n == 0 else total / n


def freq_ave(inp: ClassifiedInput, vocab: Vocab) -> float:
    """Unweighted mean corpus frequency over the input's tokens."""
    if len(inp.tokens) == 0:
        raise DataError("empty-input", f"input {inp.input_id} has no tokens")
    return float(np.mean([vocab.frequencies[t] for t in inp.tokens]))


def _apt_edges(bin_width: float) -> np.ndarray:
    if not (0.0 < bin_width <= 1.0):
        raise DataError("bad-bin-width", "bin width must lie in (0, 1]")
    n = int(np.ceil(1.0 / bin_width))
    # one trailing bin so a mean APT of exactly 1.0 still has a bin even when
    # the accumulated grid lands its nominal top edge at or below 1.0
    return np.arange(n + 2) * bin_width


def _freq_edges(values: np.ndarray, bins: int) -> np.ndarray:
    if bins < 1:
        raise DataError("bad-bins", "need at least 1 bin")
    positive = values[values > 0]
    if len(positive) == 0:
        raise DataError("degenerate-frequencies", "no input has a positive mean frequency")
    lo = float(positive.min())
    hi = float(values.max()) * (1.0 + 1e-12)
    if hi <= lo:
        hi = lo * 2.0
    return np.geomspace(lo, hi, bins + 1)


def confidence_bins(
    inputs: list[ClassifiedInput],
    apt: AptTable | None,
    vocab: Vocab | None,
    axis: BinAxis,
    bin_width: float = 0.05,
    bins: int = 20,
) -> ConfidenceBins:
    """Assign each input to one bin and apply the per-bin confidence ratio.

    APT_AVE uses a fixed linear grid of `bin_width` over [0, 1]; FREQ_AVE uses
    `bins` logarithmic bins spanning the observed frequency-mean range (top
    edge nudged up so the maximum stays inside the last half-open bin).
    Inputs with no binnable value (all tokens missing from the APT table) are
    left out; empty bins report zero counts and an undefined confidence.
    """
    if not inputs:
        raise DataError("empty-inputs", "no classified inputs given")
    if axis == BinAxis.APT_AVE:
        if apt is None:
            raise DataError("missing-apt", "APT table required for the APT_AVE axis")
        raw = [apt_ave(ci, apt) for ci in inputs]
        pairs = [(v, ci) for v, ci in zip(raw, inputs) if v is not None]
        edges = _apt_edges(bin_width)
    else:
        if vocab is None:
            raise DataError("missing-vocab", "vocab required for the FREQ_AVE axis")
        vals = np.array([freq_ave(ci, vocab) for ci in inputs])
        edges = _freq_edges(vals, bins)
        # zero-frequency means carry no scale information; pin them to bin 0
        vals = np.maximum(vals, edges[0])
        pairs = list(zip(vals.tolist(), inputs))
    n_bins = len(edges) - 1
    correct = np.zeros(n_bins, dtype=np.int64)
    incorrect = np.zeros(n_bins, dtype=np.int64)
    for value, ci in pairs:
        idx = int(np.searchsorted(edges, value, side="right")) - 1
        if idx < 0 or idx >= n_bins:
            raise DataError("value-out-of-range", f"input {ci.input_id}: value {value} unbinnable")
        if ci.pred_label == ci.true_label:
            correct[idx] += 1
        else:
            incorrect[idx] += 1
    out = tuple(
        ConfidenceBin(float(edges[i]), float(edges[i + 1]), int(correct[i]), int(incorrect[i]))
        for i in range(n_bins)
    )
    return ConfidenceBins(axis, out)
