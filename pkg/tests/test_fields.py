import itertools
import math

import numpy as np
import pytest

from tokprobe import synth
from tokprobe.fields import (
    aggregate,
    analyze_unit,
    clip,
    diagonalize,
    label_appearance,
    normalize_fields,
)
from tokprobe.types import BinaryMatrix, DataError, LabelFieldMatrix, UnitKind


def _field(values, unit=UnitKind.NODE, index=0):
    return LabelFieldMatrix(unit, index, np.asarray(values, dtype=np.float64))


def _bool_matrix(dense):
    dense = np.asarray(dense, dtype=bool)
    rows, cols = np.nonzero(dense)
    return BinaryMatrix(dense.shape[0], rows, cols, threshold=0.6)


# ------------------------------------------------------------- normalization


def test_normalize_divides_by_max():
    out = normalize_fields(_field([[2.0, 0.0], [0.0, 4.0]]))
    assert np.array_equal(out.values, [[0.5, 0.0], [0.0, 1.0]])


def test_normalize_idempotent():
    m = _field([[0.5, 0.0], [0.0, 1.0]])
    once = normalize_fields(m)
    twice = normalize_fields(once)
    assert np.array_equal(once.values, twice.values)


def test_normalize_preserves_negative_entries():
    out = normalize_fields(_field([[-1.0, 2.0], [0.5, -0.25]]))
    want = np.array([[-0.5, 1.0], [0.25, -0.125]])
    assert np.array_equal(out.values, want)
    assert out.values.max() == 1.0


def test_normalize_rejects_nonpositive():
    with pytest.raises(DataError):
        normalize_fields(_field([[0.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(DataError):
        normalize_fields(_field([[-1.0, -2.0], [-3.0, -4.0]]))


# --------------------------------------------------------------------- clip


def test_clip_strict_threshold():
    b = clip(_field([[0.61, 0.6], [0.2, 1.0]]), 0.6)
    edges = set(zip(b.rows.tolist(), b.cols.tolist()))
    assert edges == {(0, 0), (1, 1)}


def test_clip_identity_field():
    b = clip(_field(np.eye(3)), 0.6)
    assert set(zip(b.rows.tolist(), b.cols.tolist())) == {(0, 0), (1, 1), (2, 2)}


def test_clip_matches_elementwise_comparison():
    rng = np.random.default_rng(1)
    values = rng.random((9, 9))
    b = clip(_field(values), 0.6)
    got = np.zeros((9, 9), dtype=bool)
    got[b.rows, b.cols] = True
    assert np.array_equal(got, values > 0.6)


def test_clip_monotone_in_threshold():
    # raising the threshold can only remove cells: the matching (diag) and the
    # total above-threshold count are non-increasing; noise alone is not a
    # theorem (dropping a matched cell may strand others), so it is bounded
    # through the total
    rng = np.random.default_rng(2)
    m = _field(rng.random((10, 10)))
    normed = normalize_fields(m)
    prev_diag, prev_total = None, None
    for th in (0.3, 0.5, 0.7, 0.9):
        clipped = clip(normed, th)
        stats = diagonalize(clipped, values=normed.values)
        total = clipped.n_edges
        assert stats.noise <= total - stats.diag
        if prev_diag is not None:
            assert stats.diag <= prev_diag
            assert total <= prev_total
        prev_diag, prev_total = stats.diag, total


# --------------------------------------------------------------- diagonalize


def test_diagonalize_identity():
    s = diagonalize(_bool_matrix(np.eye(2)))
    assert (s.diag, s.n_c, s.c_s, s.noise) == (2, 2, 1.0, 0)


def test_diagonalize_all_ones_block():
    s = diagonalize(_bool_matrix(np.ones((2, 2))))
    assert (s.diag, s.n_c, s.c_s, s.noise) == (2, 1, 2.0, 0)
    assert s.clusters == ((0, 1),)


def test_diagonalize_off_diagonal_pair():
    # permuting columns turns this into the identity: two 1x1 blocks, no noise
    s = diagonalize(_bool_matrix([[0, 1], [1, 0]]))
    assert (s.diag, s.n_c, s.c_s, s.noise) == (2, 2, 1.0, 0)


def test_diagonalize_empty_matrix_rejected():
    with pytest.raises(DataError):
        diagonalize(BinaryMatrix(0, [], [], threshold=0.6))


def test_diagonalize_counts_unmatchable_cells_as_noise():
    s = diagonalize(_bool_matrix([[1, 1, 0], [0, 0, 0], [0, 0, 0]]))
    assert s.diag == 1
    assert s.noise == 1


def test_diag_equals_nc_times_cs_identity():
    rng = np.random.default_rng(3)
    for _ in range(50):
        dense = rng.random((6, 6)) < 0.3
        if not dense.any():
            continue
        s = diagonalize(_bool_matrix(dense))
        if s.n_c:
            assert s.diag == pytest.approx(s.n_c * s.c_s)


def _oracle_diag_noise(dense):
    """Exhaustive permutation oracle: max Diag, then min noise at that Diag."""
    n = dense.shape[0]
    total = int(dense.sum())
    best_diag = -1
    best_noise = None
    for perm in itertools.permutations(range(n)):
        pairs = [(i, perm[i]) for i in range(n) if dense[i, perm[i]]]
        diag = len(pairs)
        if diag < best_diag:
            continue
        # cluster the matched pairs through cross-cell links
        parent = list(range(len(pairs)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a in range(len(pairs)):
            for b in range(a + 1, len(pairs)):
                ia, ja = pairs[a]
                ib, jb = pairs[b]
                if dense[ia, jb] or dense[ib, ja]:
                    ra, rb = find(a), find(b)
                    if ra != rb:
                        parent[rb] = ra
        groups = {}
        for k in range(len(pairs)):
            groups.setdefault(find(k), []).append(k)
        within = 0
        for members in groups.values():
            rows = [pairs[k][0] for k in members]
            cols = [pairs[k][1] for k in members]
            within += int(dense[np.ix_(rows, cols)].sum())
        noise = total - within
        if diag > best_diag or (diag == best_diag and noise < best_noise):
            best_diag, best_noise = diag, noise
    return best_diag, best_noise


def test_diagonalize_matches_exhaustive_oracle():
    rng = np.random.default_rng(7)
    mismatches = 0
    for trial in range(500):
        n = int(rng.integers(2, 7))
        dense = rng.random((n, n)) < rng.uniform(0.1, 0.7)
        want_diag, want_noise = _oracle_diag_noise(dense)
        s = diagonalize(_bool_matrix(dense))
        if (s.diag, s.noise) != (want_diag, want_noise):
            mismatches += 1
    assert mismatches == 0


def test_diagonalize_invariant_under_relabeling():
    rng = np.random.default_rng(9)
    for _ in range(30):
        n = 6
        dense = rng.random((n, n)) < 0.35
        base = diagonalize(_bool_matrix(dense))
        perm = rng.permutation(n)
        relabeled = dense[np.ix_(perm, perm)]
        again = diagonalize(_bool_matrix(relabeled))
        assert (base.diag, base.n_c, base.noise) == (again.diag, again.n_c, again.noise)
        assert base.c_s == pytest.approx(again.c_s)


def test_diagonalize_permutation_is_complete():
    rng = np.random.default_rng(10)
    dense = rng.random((12, 12)) < 0.2
    s = diagonalize(_bool_matrix(dense))
    assert sorted(s.permutation) == list(range(12))


# ----------------------------------------------------------------- aggregate


def test_aggregate_published_ratio_examples():
    # mean diag and mean noise feed the n_labels * diag / noise ratio
    agg = aggregate(
        [  # one synthetic unit carrying the means directly
            _stats(diag=149, n_c=100, noise=1250),
        ],
        n_labels=64,
    )
    assert agg.snr == pytest.approx(64 * 149 / 1250)


def _stats(diag, n_c, noise):
    # helper: a well-formed SnpStats carrying given counts
    from tokprobe.fields import SnpStats

    clusters = tuple((i,) for i in range(n_c - 1))
    clusters += (tuple(range(n_c - 1, diag)),)
    return SnpStats(
        unit=UnitKind.NODE,
        unit_index=0,
        diag=diag,
        n_c=n_c,
        c_s=diag / n_c,
        noise=noise,
        permutation=(),
        clusters=clusters,
    )


def test_aggregate_zero_noise_infinite_marker():
    agg = aggregate([_stats(2, 2, 0)], n_labels=8)
    assert math.isinf(agg.snr)


def test_aggregate_empty_rejected():
    with pytest.raises(DataError):
        aggregate([], n_labels=4)


# ---------------------------------------------------------- label appearance


def test_label_appearance_counts():
    # craft cluster contents: unit one clusters {(0,3)}, unit two {(3,), (1,2)}
    from tokprobe.fields import SnpStats

    s1 = SnpStats(UnitKind.NODE, 0, 2, 1, 2.0, 0, (), ((0, 3),))
    s2 = SnpStats(UnitKind.NODE, 1, 3, 2, 1.5, 0, (), ((1, 2), (3,)))
    la = label_appearance([s1, s2], n_labels=5)
    assert la.appearances.tolist() == [1, 1, 1, 2, 0]


def test_label_appearance_empty():
    la = label_appearance([], n_labels=4)
    assert la.appearances.tolist() == [0, 0, 0, 0]


def test_label_appearance_accuracy_mismatch():
    with pytest.raises(DataError):
        label_appearance([], n_labels=4, accuracy=np.ones(3))


def test_label_appearance_positive_correlation():
    # accuracy generated as an increasing function of appearances plus noise
    rng = np.random.default_rng(12)
    n_labels = 64
    blocks = synth.random_blocks(31, 40, n_labels, [1, 2], [1, 1, 2])
    matrices, truth = synth.gen_fields(31, 40, n_labels, blocks, noise_rate=3.0)
    stats = [analyze_unit(m) for m in matrices]
    la = label_appearance(stats, n_labels)
    accuracy = 0.3 + 0.05 * la.appearances + rng.normal(0, 0.02, size=n_labels)
    la2 = label_appearance(stats, n_labels, accuracy=np.clip(accuracy, 0, 1))
    # 3-sigma check on the Fisher z of the observed correlation
    z = 0.5 * np.log((1 + la2.pearson_r) / (1 - la2.pearson_r))
    sigma = 1 / np.sqrt(n_labels - 3)
    assert z > 3 * sigma


# ------------------------------------------------------------ planted fields


def test_planted_fields_recovered_exactly():
    blocks = [[[1, 2]], [[5]], [[0], [3, 4]], []]
    matrices, truth = synth.gen_fields(17, 4, 8, blocks, noise_rate=2.0)
    for m, unit_truth in zip(matrices, truth["units"]):
        if not unit_truth["blocks"]:
            continue  # a blockless unit's normalized max is its own signal
        s = analyze_unit(m, threshold=0.6)
        assert s.diag == unit_truth["diag"]
        assert s.n_c == unit_truth["n_c"]
        assert s.noise == unit_truth["noise"]
        got_clusters = sorted(tuple(c) for c in s.clusters)
        want_clusters = sorted(tuple(b) for b in unit_truth["blocks"])
        assert got_clusters == want_clusters


def test_planted_fields_zero_noise_gives_infinite_snr():
    blocks = [[[0, 1]], [[2]]]
    matrices, _ = synth.gen_fields(5, 2, 6, blocks, noise_rate=0.0)
    stats = [analyze_unit(m) for m in matrices]
    agg = aggregate(stats, n_labels=6)
    assert agg.mean_noise == 0.0
    assert math.isinf(agg.snr)


def test_planted_fields_single_block_example():
    matrices, _ = synth.gen_fields(1, 1, 6, [[[2, 4]]], noise_rate=0.0)
    s = analyze_unit(matrices[0])
    assert (s.diag, s.n_c, s.c_s, s.noise) == (2, 1, 2.0, 0)
