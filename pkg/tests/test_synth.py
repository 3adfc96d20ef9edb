import numpy as np
import pytest

from tokprobe import io as tio
from tokprobe import synth
from tokprobe.apt import compute_apt
from tokprobe.confusion import (
    ThresholdConfig,
    adjacency,
    binarize_threshold,
    build_confusion,
    normalize_confusion,
)
from tokprobe.percolation import percolate
from tokprobe.types import DataError, Vocab


def _vocab(n):
    return Vocab([f"t{i}" for i in range(n)], np.ones(n, dtype=np.int64))


def test_same_seed_byte_identical_files(tmp_path):
    spec = synth.PlantedSpec(seed=9, t_number=50, p_correct=0.5)
    log1, _ = synth.gen_events(spec, 5000)
    log2, _ = synth.gen_events(synth.PlantedSpec(seed=9, t_number=50, p_correct=0.5), 5000)
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    tio.write_events_text(a, log1)
    tio.write_events_text(b, log2)
    assert a.read_bytes() == b.read_bytes()
    log3, _ = synth.gen_events(synth.PlantedSpec(seed=10, t_number=50, p_correct=0.5), 5000)
    c = tmp_path / "c.txt"
    tio.write_events_text(c, log3)
    assert a.read_bytes() != c.read_bytes()


def test_truth_travels_with_data():
    spec = synth.PlantedSpec(
        seed=1, t_number=10, planted_clusters=[[0, 1]], p_correct=0.25, p_within=1.0
    )
    _, truth = synth.gen_events(spec, 100)
    assert truth["planted_clusters"] == [[0, 1]]
    assert truth["partition"][0] == [0, 1]
    assert len(truth["effective_p_correct"]) == 10
    # singleton tokens with p_within=1 can never miss: effective p is 1
    assert truth["effective_p_correct"][5] == 1.0
    assert truth["effective_p_correct"][0] == 0.25


def test_perfect_probability_gives_mean_apt_one_and_singletons():
    spec = synth.PlantedSpec(seed=4, t_number=30, p_correct=1.0)
    log, _ = synth.gen_events(spec, 30_000)
    table = compute_apt(log, _vocab(30))
    assert table.mean_apt == 1.0
    n = normalize_confusion(build_confusion(log, t_number=30))
    adj = adjacency(binarize_threshold(n, ThresholdConfig(0.05)))
    clusters = percolate(adj, n.retained)
    assert clusters.sizes() == [1] * len(n.retained)


def test_forced_pair_structure_with_zero_correctness():
    # p_correct = 0 with pair clusters forces every event onto the partner,
    # which leaves every diagonal at zero: the confusion matrix is exactly the
    # pair map and normalization must report the all-rows-excluded condition
    pairs = [[0, 1], [2, 3], [4, 5]]
    spec = synth.PlantedSpec(
        seed=8, t_number=6, planted_clusters=pairs, p_correct=0.0, p_within=1.0,
        frequency_profile=np.ones(6),
    )
    log, _ = synth.gen_events(spec, 6000)
    m = build_confusion(log, t_number=6)
    partner = {0: 1, 1: 0, 2: 3, 3: 2, 4: 5, 5: 4}
    for (r, c), count in m.to_dict().items():
        assert c == partner[r]
        assert count > 0
    with pytest.raises(DataError) as err:
        normalize_confusion(m)
    assert err.value.code == "all-rows-excluded"


def test_event_rows_track_spec_distributions():
    spec = synth.PlantedSpec(
        seed=13, t_number=20, planted_clusters=[[0, 1, 2, 3]],
        p_correct=0.5, p_within=0.6, frequency_profile=np.ones(20),
    )
    log, truth = synth.gen_events(spec, 1_000_000)
    m = build_confusion(log, t_number=20)
    cells = m.to_dict()
    n_t = np.bincount(log.true_tokens, minlength=20)
    # token 0: correct 0.5; within errors uniform over {1,2,3} w.p. 0.6;
    # outside errors uniform over the other 19 tokens w.p. 0.4
    for target, p in [
        (0, 0.5),
        (1, 0.5 * (0.6 / 3 + 0.4 / 19)),
        (10, 0.5 * 0.4 / 19),
    ]:
        mean = n_t[0] * p
        sigma = np.sqrt(n_t[0] * p * (1 - p))
        assert abs(cells.get((0, target), 0) - mean) <= 3 * sigma


def test_kinds_follow_mask_split():
    spec = synth.PlantedSpec(seed=2, t_number=5, p_correct=1.0)
    log, _ = synth.gen_events(spec, 200_000)
    fractions = np.bincount(log.kinds, minlength=3) / len(log)
    for got, want in zip(fractions, (0.8, 0.1, 0.1)):
        assert abs(got - want) < 0.01


def test_positions_and_inputs_within_protocol():
    spec = synth.PlantedSpec(seed=2, t_number=5, p_correct=1.0)
    log, _ = synth.gen_events(spec, 10_000)
    assert log.positions.min() >= 0
    assert log.positions.max() < 128
    per_input = np.bincount(log.input_ids)
    assert per_input.max() == 19  # round(0.15 * 128)


def test_gen_embedding_deterministic():
    spec = synth.PlantedSpec(seed=5, t_number=12, planted_clusters=[[0, 1, 2]])
    a, _ = synth.gen_embedding(spec, 16, 0.9, 0.2)
    b, _ = synth.gen_embedding(
        synth.PlantedSpec(seed=5, t_number=12, planted_clusters=[[0, 1, 2]]), 16, 0.9, 0.2
    )
    assert np.array_equal(a.vectors, b.vectors)


def test_gen_embedding_cosine_bounds():
    spec = synth.PlantedSpec(
        seed=6, t_number=20, planted_clusters=[list(range(8)), list(range(8, 12))]
    )
    emb, _ = synth.gen_embedding(spec, 32, 0.85, 0.2)
    unit = emb.unit_rows()
    cos = unit @ unit.T
    for members in spec.planted_clusters:
        sub = cos[np.ix_(members, members)]
        assert sub.min() >= 0.85 - 1e-9
    assert abs(cos[0, 9]) <= 0.2  # cross-cluster pairs are orthogonal
    assert abs(cos[0, 15]) <= 0.2  # planted vs singleton too


def test_gen_embedding_requires_separation():
    spec = synth.PlantedSpec(seed=1, t_number=4, planted_clusters=[[0, 1]])
    with pytest.raises(DataError):
        synth.gen_embedding(spec, 8, 0.5, 0.5)


def test_gen_fields_deterministic_and_plantable():
    blocks = [[[0, 1]], [[3]]]
    a, ta = synth.gen_fields(3, 2, 6, blocks, noise_rate=1.0)
    b, tb = synth.gen_fields(3, 2, 6, blocks, noise_rate=1.0)
    assert all(np.array_equal(x.values, y.values) for x, y in zip(a, b))
    assert ta == tb


def test_gen_fields_rejects_unsafe_ranges():
    with pytest.raises(DataError):
        synth.gen_fields(1, 1, 4, [[[0]]], 0.0, background_range=(0.1, 0.7))


def test_gen_fields_aggregate_tracks_planted_means():
    n_units, n_labels = 200, 64
    blocks = synth.random_blocks(41, n_units, n_labels, [1, 2], [1, 1, 1, 2])
    matrices, truth = synth.gen_fields(41, n_units, n_labels, blocks, noise_rate=12.5)
    from tokprobe.fields import aggregate, analyze_unit

    stats = [analyze_unit(m) for m in matrices]
    agg = aggregate(stats, n_labels)
    want_diag = float(np.mean([u["diag"] for u in truth["units"]]))
    want_noise = float(np.mean([u["noise"] for u in truth["units"]]))
    assert agg.mean_diag == pytest.approx(want_diag)
    assert agg.mean_noise == pytest.approx(want_noise)
    assert abs(want_noise - 12.5) / 12.5 < 0.15  # drawn noise tracks the rate


def test_gen_inputs_accuracy():
    inputs, truth = synth.gen_inputs(7, 20_000, 8, 100, 10, 0.66)
    rate = sum(1 for ci in inputs if ci.pred_label == ci.true_label) / len(inputs)
    assert abs(rate - 0.66) < 0.01
    assert all(0 <= ci.true_label < 10 and 0 <= ci.pred_label < 10 for ci in inputs)
    assert all(len(ci.tokens) == 8 for ci in inputs)
