import itertools
import json
import xml.etree.ElementTree as ET

import numpy as np
import pandas as pd
import pytest

import config
from src.cli import main
from src.errors import ConfigError, StageError
from src.events import Window, extract_windows, read_events
from src.experiments import base_seed, experiment_config, run_experiment, save_results
from src.hmm import fit_window
from src.pipeline import GlaConfig, fit_windows, load_features, run
from src.report import render_svg
from src.synth import gen_experiment1, labels_path_for

FAST = dict(
    states=4, max_iters=20, tsne_iters=100, perplexity=10.0,
    min_cluster_size=5, show_progress=False,
)


def _config(events_path, out_dir, **overrides):
    settings = dict(input_path=events_path, window_size=20, shift=20, seed=7,
                    out_dir=out_dir, **FAST)
    settings.update(overrides)
    return GlaConfig(**settings)


def test_run_writes_every_artifact(exp1_file, tmp_path):
    events_path, _ = exp1_file
    out = tmp_path / "run"
    report = run(_config(events_path, out, labels_path=labels_path_for(events_path)))

    for name in (config.REPORT_FILE, config.TIMINGS_FILE, config.EMBEDDING_FILE,
                 config.CLUSTERS_FILE, config.PLOT_FILE):
        assert (out / name).is_file()
    assert not (out / config.FEATURES_FILE).exists()

    payload = json.loads((out / config.REPORT_FILE).read_text())
    assert payload["schema"] == config.REPORT_SCHEMA
    assert payload["num_windows"] == 62
    assert payload["outliers"] == report.outlier_ids
    assert payload["metrics"]["true_positives"] + payload["metrics"]["false_negatives"] == 2
    assert "timings" not in payload
    assert set(json.loads((out / config.TIMINGS_FILE).read_text())) >= {"ingest", "fit", "embed"}


def test_window_starts_match_extraction(exp1_file, tmp_path):
    events_path, _ = exp1_file
    report = run(_config(events_path, tmp_path / "run", window_size=10, shift=5))
    expected = extract_windows(read_events(events_path), 10, 5)
    assert report.windows["start"].tolist() == [w.start for w in expected]
    assert report.windows["window_id"].tolist() == list(range(len(expected)))


def test_anomaly_flags_are_exactly_the_noise_labels(exp1_file, tmp_path):
    events_path, _ = exp1_file
    out = tmp_path / "run"
    report = run(_config(events_path, out))
    clusters = pd.read_csv(out / config.CLUSTERS_FILE)
    noise_ids = clusters.loc[clusters["label"] == -1, "window_id"].tolist()
    assert noise_ids == report.outlier_ids
    assert (report.windows["anomaly"] == (report.windows["label"] == -1)).all()


def test_identical_runs_give_identical_bytes(exp1_file, tmp_path):
    events_path, _ = exp1_file
    out = tmp_path / "run"
    run(_config(events_path, out))
    first = {n: (out / n).read_bytes() for n in (config.REPORT_FILE, config.PLOT_FILE,
                                                 config.EMBEDDING_FILE, config.CLUSTERS_FILE)}
    run(_config(events_path, out))
    for name, data in first.items():
        assert (out / name).read_bytes() == data, name


def test_features_file_skips_fitting(exp1_file, tmp_path):
    events_path, _ = exp1_file
    full = run(_config(events_path, tmp_path / "a", dump_features=True))
    features_path = tmp_path / "a" / config.FEATURES_FILE
    _, starts, matrix = load_features(features_path)
    assert matrix.shape == (62, config.GAUGE_COUNT)
    assert starts.tolist() == full.windows["start"].tolist()

    resumed = run(_config(None, tmp_path / "b", features_in=features_path))
    np.testing.assert_array_equal(resumed.windows[["x", "y"]].to_numpy(),
                                  full.windows[["x", "y"]].to_numpy())
    assert resumed.outlier_ids == full.outlier_ids


def test_failed_stage_leaves_no_artifacts(tmp_path):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    out = tmp_path / "run"
    with pytest.raises(StageError) as info:
        run(_config(empty, out))
    assert info.value.stage == "ingest"
    assert info.value.exit_code == config.EXIT_INPUT_ERROR
    assert not out.exists()


def test_invalid_config_is_rejected_before_any_stage(exp1_file, tmp_path):
    events_path, _ = exp1_file
    with pytest.raises(ConfigError):
        run(_config(events_path, tmp_path / "run", perplexity=1.0))


def test_cli_exit_code_for_empty_input(tmp_path):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    code = main(["--log-dir", str(tmp_path / "logs"), "run", "--input", str(empty),
                 "--out", str(tmp_path / "run")])
    assert code == config.EXIT_INPUT_ERROR


def test_cli_synth_writes_dataset(tmp_path):
    out = tmp_path / "exp2.txt"
    assert main(["--log-dir", str(tmp_path / "logs"), "synth", "exp2", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 501 * 21
    assert labels_path_for(out).is_file()


def test_job_count_does_not_change_fits(exp1_file):
    events_path, _ = exp1_file
    windows = extract_windows(read_events(events_path), 20, 20)[:6]
    serial = fit_windows(windows, 4, _config(events_path, None, n_jobs=1))
    parallel = fit_windows(windows, 4, _config(events_path, None, n_jobs=2))
    for a, b in zip(serial, parallel):
        np.testing.assert_array_equal(a.params.emit, b.params.emit)
        assert a.log_likelihood_trace == b.log_likelihood_trace


def test_render_svg_is_deterministic_and_marks_noise(rng):
    points = rng.normal(size=(12, 2))
    labels = np.array([0] * 5 + [1] * 5 + [-1, -1])
    svg = render_svg(points, labels)
    assert svg == render_svg(points, labels)
    root = ET.fromstring(svg.encode("utf-8"))
    ids = {el.get("id") for el in root.iter()}
    assert {"cluster-0", "cluster-1", "noise"} <= ids


def test_render_svg_single_point():
    svg = render_svg(np.array([[0.0, 0.0]]), np.array([-1]))
    root = ET.fromstring(svg.encode("utf-8"))
    assert "noise" in {el.get("id") for el in root.iter()}


def test_experiment_harness_writes_results(tmp_path):
    results, description = run_experiment(
        "exp1", seeds=[0], work_dir=tmp_path / "work",
        states=4, max_iters=10, tsne_iters=50, perplexity=10.0, min_cluster_size=5,
    )
    assert results["seed"].tolist() == [0]
    assert results.loc[0, "tp"] + results.loc[0, "fn"] == 2
    text = save_results(results, "exp1", description, tmp_path / "out")
    assert "exp1" in text
    assert (tmp_path / "out" / "exp1_results_raw.csv").is_file()


def test_identical_windows_share_the_first_fit():
    forward = np.array([0, 1, 2, 3] * 5)
    backward = forward[::-1].copy()
    windows = [Window(1, 1, forward), Window(2, 21, backward), Window(3, 41, forward.copy())]
    cfg = _config(None, None, states=3, max_iters=10)
    fits = fit_windows(windows, 4, cfg)
    assert fits[2] is fits[0]
    assert fits[1] is not fits[0]
    expected = fit_window(forward, 3, 4, cfg.seed + 1, restarts=cfg.restarts,
                          max_iters=10, tol=cfg.tol)
    assert fits[0].log_likelihood_trace == expected.log_likelihood_trace


def test_experiment_trials_do_not_share_window_seeds(tmp_path):
    seeds = [base_seed(s) for s in config.EXPERIMENT_SEEDS]
    ranges = [set(range(s + 1, s + 63)) for s in seeds]
    for a, b in itertools.combinations(ranges, 2):
        assert not a & b

    cfg = experiment_config("exp1", gen_experiment1(seed=4), tmp_path / "events.txt",
                            tmp_path / "run", 4)
    assert cfg.seed == base_seed(4)
    assert cfg.restarts == config.EXPERIMENT_RESTARTS
    assert cfg.cluster_selection_epsilon == config.EXP1_SELECTION_EPSILON


def test_render_svg_experiment1_layout(rng, svg_markers):
    points = np.vstack([rng.normal(size=(60, 2)), [[-30.0, 0.0], [-25.0, -25.0]]])
    labels = np.array([0] * 60 + [-1, -1])
    assert svg_markers(render_svg(points, labels)) == {"cluster-0": 60, "noise": 2}


def test_render_svg_counts_markers_per_group(rng, svg_markers):
    points = rng.normal(size=(12, 2))
    labels = np.array([0] * 5 + [1] * 5 + [-1, -1])
    assert svg_markers(render_svg(points, labels)) == {"cluster-0": 5, "cluster-1": 5, "noise": 2}


def test_cli_accepts_cluster_selection_epsilon(exp1_file, tmp_path):
    events_path, _ = exp1_file
    code = main(["--log-dir", str(tmp_path / "logs"), "run", "--input", str(events_path),
                 "--window-size", "20", "--shift", "20", "--states", "3", "--max-iters", "5",
                 "--tsne-iters", "50", "--perplexity", "10", "--min-cluster-size", "5",
                 "--cluster-selection-epsilon", "0.5", "--out", str(tmp_path / "run")])
    assert code == config.EXIT_OK
    payload = json.loads((tmp_path / "run" / config.REPORT_FILE).read_text())
    assert payload["config"]["cluster_selection_epsilon"] == 0.5
