import numpy as np
import pytest

from src.errors import ConfigError, InputError
from src.synth import (
    ANOMALOUS,
    LabeledDataset,
    bigram_transition_matrix,
    exp2_sequences,
    gen_experiment1,
    gen_experiment2,
    generate,
    labels_path_for,
    load_labels,
    write_dataset,
)

TEMPLATE = list("ABCD") * 5


def test_experiment1_shape_and_labels():
    dataset = gen_experiment1(seed=0)
    assert len(dataset.windows) == 62
    assert dataset.anomalous_ids == {60, 61}
    assert dataset.window_size == 20
    assert all(len(w) == 20 for w in dataset.windows)


def test_experiment1_normal_rows_differ_in_at_most_two_positions():
    for seed in range(5):
        for window in gen_experiment1(seed).windows[:60]:
            assert sum(a != b for a, b in zip(window, TEMPLATE)) <= 2
            assert set(window) <= set("ABCD")


def test_experiment1_anomalies():
    dataset = gen_experiment1(seed=1)
    assert dataset.windows[60] == list("DCBA") * 5
    assert dataset.windows[61] == ["A"] * 20


def test_experiment1_is_deterministic_by_seed():
    assert gen_experiment1(4).windows == gen_experiment1(4).windows
    assert gen_experiment1(4).windows != gen_experiment1(5).windows


def test_experiment2_layout():
    dataset = gen_experiment2()
    t1, t2 = exp2_sequences()
    assert len(t1) == len(t2) == 21
    assert len(dataset.windows) == 501
    assert dataset.anomalous_ids == {500}
    assert dataset.windows[500] == t2
    assert all(w == t1 for w in dataset.windows[:500])


def test_experiment2_sequences_share_their_markov_chain():
    t1, t2 = exp2_sequences()
    expected = np.full((2, 2), 0.5)
    np.testing.assert_array_equal(bigram_transition_matrix(t1, "AB"), expected)
    np.testing.assert_array_equal(bigram_transition_matrix(t2, "AB"), expected)


def test_generate_rejects_unknown_names():
    with pytest.raises(ConfigError):
        generate("exp3")


def test_write_dataset_and_load_labels(tmp_path):
    dataset = gen_experiment1(seed=2)
    events_path, sidecar = write_dataset(dataset, tmp_path / "d" / "events.txt")
    assert sidecar == labels_path_for(events_path) == tmp_path / "d" / "events.labels.csv"
    lines = events_path.read_text().splitlines()
    assert lines == dataset.events()
    assert len(lines) == 62 * 20

    anomalous, total = load_labels(sidecar)
    assert anomalous == {60, 61}
    assert total == 62


def test_load_labels_rejects_bad_files(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("window_id,label\n0,2\n")
    with pytest.raises(InputError):
        load_labels(bad)
    bad.write_text("id,flag\n0,1\n")
    with pytest.raises(InputError):
        load_labels(bad)
    with pytest.raises(InputError):
        load_labels(tmp_path / "missing.csv")


def test_label_count_must_match_windows():
    with pytest.raises(InputError):
        LabeledDataset(windows=[["A"]], labels=[0, ANOMALOUS], description="")
