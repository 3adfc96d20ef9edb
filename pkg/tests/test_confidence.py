import numpy as np
import pytest

from tokprobe import synth
from tokprobe.apt import AptTable
from tokprobe.confidence import BinAxis, apt_ave, confidence_bins, freq_ave
from tokprobe.types import ClassifiedInput, DataError, Vocab


def _vocab(n, freqs):
    return Vocab([f"t{i}" for i in range(n)], np.asarray(freqs, dtype=np.int64))


def test_apt_ave_mean():
    table = AptTable.from_counts({0: (10, 2), 1: (10, 8)}, t_number=3)
    ci = ClassifiedInput(0, (0, 1), 0, 0)
    assert apt_ave(ci, table) == pytest.approx(0.5)


def test_apt_ave_skips_missing_tokens():
    table = AptTable.from_counts({0: (10, 2)}, t_number=3)
    ci = ClassifiedInput(0, (0, 2), 0, 0)
    assert apt_ave(ci, table) == pytest.approx(0.2)


def test_apt_ave_all_missing_is_undefined():
    table = AptTable.from_counts({0: (10, 2)}, t_number=3)
    assert apt_ave(ClassifiedInput(0, (1, 2), 0, 0), table) is None


def test_apt_ave_empty_tokens_rejected():
    table = AptTable.from_counts({0: (1, 1)}, t_number=1)
    with pytest.raises(DataError):
        apt_ave(ClassifiedInput(0, (), 0, 0), table)


def test_apt_ave_matches_brute_force_on_many_inputs():
    rng = np.random.default_rng(3)
    t_number = 60
    selected = rng.integers(1, 50, size=t_number)
    correct = (selected * rng.random(t_number)).astype(np.int64)
    table = AptTable(t_number, selected, correct)
    inputs, _ = synth.gen_inputs(5, 1000, 12, t_number, 4, 0.7)
    for ci in inputs[:200]:
        vals = [correct[t] / selected[t] for t in ci.tokens]
        assert apt_ave(ci, table) == pytest.approx(float(np.mean(vals)))


def test_single_bin_ratio():
    table = AptTable.from_counts({0: (1, 1)}, t_number=1)
    inputs = [
        ClassifiedInput(0, (0,), 1, 1),
        ClassifiedInput(1, (0,), 1, 1),
        ClassifiedInput(2, (0,), 1, 1),
        ClassifiedInput(3, (0,), 1, 2),
    ]
    bins = confidence_bins(inputs, table, None, BinAxis.APT_AVE, bin_width=1.0)
    populated = [b for b in bins.bins if b.total]
    assert len(populated) == 1
    assert populated[0].confidence == pytest.approx(0.75)


def test_empty_bins_have_undefined_confidence():
    table = AptTable.from_counts({0: (2, 1)}, t_number=1)
    inputs = [ClassifiedInput(0, (0,), 0, 0)]
    bins = confidence_bins(inputs, table, None, BinAxis.APT_AVE, bin_width=0.05)
    for b in bins.bins:
        if b.total == 0:
            assert b.confidence is None
    assert bins.n_binned == 1


def test_boundary_value_goes_to_upper_bin():
    table = AptTable.from_counts({0: (10, 5)}, t_number=1)  # apt exactly 0.5
    inputs = [ClassifiedInput(0, (0,), 0, 0)]
    bins = confidence_bins(inputs, table, None, BinAxis.APT_AVE, bin_width=0.25)
    hit = [b for b in bins.bins if b.total][0]
    assert hit.lower == pytest.approx(0.5)


def test_counts_conserved_and_global_ratio_exact():
    t_number = 300
    inputs, truth = synth.gen_inputs(11, 10_000, 10, t_number, 8, 0.66)
    selected = np.full(t_number, 20, dtype=np.int64)
    correct = np.arange(t_number) % 21
    table = AptTable(t_number, selected, correct.astype(np.int64))
    vocab = _vocab(t_number, np.arange(1, t_number + 1)[::-1])
    for axis, kw in ((BinAxis.APT_AVE, {}), (BinAxis.FREQ_AVE, {"bins": 20})):
        bins = confidence_bins(inputs, table, vocab, axis, **kw)
        assert bins.n_binned == 10_000
        overall = sum(1 for ci in inputs if ci.pred_label == ci.true_label) / len(inputs)
        assert bins.global_confidence == overall  # exact, integer-ratio equality


def test_flatness_when_correctness_independent_of_apt():
    t_number = 400
    inputs, truth = synth.gen_inputs(21, 10_000, 12, t_number, 8, 0.7)
    rng = np.random.default_rng(0)
    selected = np.full(t_number, 50, dtype=np.int64)
    correct = (selected * rng.random(t_number)).astype(np.int64)
    table = AptTable(t_number, selected, correct)
    bins = confidence_bins(inputs, table, None, BinAxis.APT_AVE, bin_width=0.05)
    rate = truth["accuracy"]
    for b in bins.bins:
        if b.total == 0:
            continue
        sigma = np.sqrt(rate * (1 - rate) / b.total)
        assert abs(b.confidence - rate) <= 3 * sigma + 1e-12


def test_freq_axis_uses_log_bins():
    vocab = _vocab(4, [1, 10, 100, 1000])
    table = AptTable.from_counts({0: (1, 1)}, t_number=4)
    inputs = [
        ClassifiedInput(0, (0,), 0, 0),
        ClassifiedInput(1, (1,), 0, 0),
        ClassifiedInput(2, (2,), 0, 1),
        ClassifiedInput(3, (3,), 0, 0),
    ]
    bins = confidence_bins(inputs, table, vocab, BinAxis.FREQ_AVE, bins=3)
    assert bins.n_binned == 4
    widths = [b.upper / b.lower for b in bins.bins]
    assert all(w == pytest.approx(widths[0], rel=1e-9) for w in widths)


def test_freq_ave_value():
    vocab = _vocab(3, [10, 20, 60])
    assert freq_ave(ClassifiedInput(0, (0, 1, 2), 0, 0), vocab) == pytest.approx(30.0)


def test_empty_inputs_rejected():
    table = AptTable.from_counts({0: (1, 1)}, t_number=1)
    with pytest.raises(DataError):
        confidence_bins([], table, None, BinAxis.APT_AVE)
