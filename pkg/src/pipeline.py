"""
GLA pipeline: events -> windows -> per-window Baum-Welch -> gauge features
-> t-SNE -> HDBSCAN -> outlier report.

Artifacts written to the output directory:
    report.json    config echo, per-window records, metrics (schema gla-report/1)
    timings.json   wall-clock seconds per stage (kept out of report.json so
                   identical runs give identical report bytes)
    embedding.csv  window_id, x, y
    clusters.csv   window_id, label (-1 = noise)
    features.csv   window_id, start, g1..gM (only with dump_features)
    plot.svg       clustered scatter of the embedding
"""

import logging
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from sklearn.preprocessing import RobustScaler
from tqdm import tqdm

import config
from src import cluster, embed, events, gauge, hmm
from src.errors import ConfigError, InputError, StageError
from src.evaluate import score
from src.report import render_svg
from src.synth import load_labels
from src.utils import dumps_json, read_csv, remove_artifacts, write_csv, write_json

logger = logging.getLogger(__name__)


@dataclass
class GlaConfig:
    input_path: Path = None
    input_format: str = "plain"
    app: str = None
    window_size: int = config.WINDOW_SIZE
    shift: int = config.SHIFT
    states: int = config.HIDDEN_STATES
    restarts: int = config.RESTARTS
    max_iters: int = config.BW_MAX_ITERS
    tol: float = config.BW_TOL
    gauge_mode: str = config.GAUGE_MODE
    gauge_count: int = config.GAUGE_COUNT
    gauge_seed: int = None  # None means seed
    loglik_floor: float = config.LOGLIK_FLOOR
    perplexity: float = config.PERPLEXITY
    tsne_iters: int = config.TSNE_ITERS
    tsne_learning_rate: float = config.TSNE_LEARNING_RATE
    tsne_seed: int = None  # None means seed
    min_cluster_size: int = config.MIN_CLUSTER_SIZE
    min_samples: int = config.MIN_SAMPLES
    cluster_selection_epsilon: float = config.CLUSTER_SELECTION_EPSILON
    seed: int = config.SEED
    out_dir: Path = config.OUTPUT_DIR / "run"
    labels_path: Path = None
    features_in: Path = None
    dump_features: bool = False
    dump_models: Path = None
    n_jobs: int = config.N_JOBS
    show_progress: bool = field(default=True, compare=False)

    @property
    def effective_shift(self):
        return self.shift if self.shift is not None else events.default_shift(self.window_size)

    @property
    def effective_gauge_seed(self):
        return self.gauge_seed if self.gauge_seed is not None else self.seed

    @property
    def effective_tsne_seed(self):
        return self.tsne_seed if self.tsne_seed is not None else self.seed

    def validate(self):
        checks = [
            (self.input_path is not None or self.features_in is not None,
             "an input file or a features file is required"),
            (self.input_format in config.INPUT_FORMATS,
             f"format must be one of {config.INPUT_FORMATS}"),
            (self.window_size >= 1, "window size must be at least 1"),
            (self.shift is None or self.shift >= 1, "shift must be at least 1"),
            (self.states >= 1, "states must be at least 1"),
            (self.restarts >= 1, "restarts must be at least 1"),
            (self.max_iters >= 1, "max_iters must be at least 1"),
            (self.tol >= 0, "tol must be non-negative"),
            (self.gauge_mode in config.GAUGE_MODES,
             f"gauge mode must be one of {config.GAUGE_MODES}"),
            (self.gauge_count >= 1, "gauge count must be at least 1"),
            (self.loglik_floor < 0, "log-likelihood floor must be negative"),
            (self.perplexity > 1, "perplexity must be greater than 1"),
            (self.tsne_iters >= 1, "t-SNE iterations must be at least 1"),
            (self.tsne_learning_rate > 0, "learning rate must be positive"),
            (self.min_cluster_size >= 2, "min cluster size must be at least 2"),
            (self.min_samples is None or self.min_samples >= 1, "min samples must be at least 1"),
            (self.cluster_selection_epsilon >= 0, "cluster selection epsilon must be non-negative"),
            (self.n_jobs != 0, "n_jobs must be nonzero"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        return self

    def to_dict(self):
        out = asdict(self)
        out.pop("show_progress")
        out["shift"] = self.effective_shift
        out["gauge_seed"] = self.effective_gauge_seed
        out["tsne_seed"] = self.effective_tsne_seed
        out.pop("n_jobs")  # execution detail; results do not depend on it
        return {k: (str(v) if isinstance(v, Path) else v) for k, v in out.items()}


@dataclass(eq=False)
class OutlierReport:
    windows: pd.DataFrame  # window_id, k, start, label, x, y, anomaly
    config: dict
    num_clusters: int
    clamped_entries: int
    alphabet: list = None
    gauge_count: int = 0
    metrics: dict = None
    timings: dict = field(default_factory=dict)

    @property
    def outlier_ids(self):
        return self.windows.loc[self.windows["anomaly"], "window_id"].astype(int).tolist()

    def to_dict(self):
        return {
            "schema": config.REPORT_SCHEMA,
            "config": self.config,
            "alphabet": self.alphabet,
            "num_windows": int(len(self.windows)),
            "gauge_count": self.gauge_count,
            "clamped_entries": self.clamped_entries,
            "num_clusters": self.num_clusters,
            "outliers": self.outlier_ids,
            "metrics": self.metrics,
            "windows": [
                {
                    "window_id": int(r.window_id), "k": int(r.k), "start": int(r.start),
                    "label": int(r.label), "x": float(r.x), "y": float(r.y),
                    "anomaly": bool(r.anomaly),
                }
                for r in self.windows.itertuples(index=False)
            ],
        }

    def to_json(self):
        return dumps_json(self.to_dict())


@contextmanager
def _stage(name, timings):
    logger.info(f"Stage '{name}' started")
    t0 = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        raise StageError(name, e) from e
    finally:
        timings[name] = round(time.perf_counter() - t0, 3)
    logger.info(f"Stage '{name}' done in {timings[name]:.2f}s")


def fit_windows(windows, num_symbols, cfg):
    """
    Train one HMM per window; window k uses seed + k so any job count gives the same fits.

    Windows with the same code sequence share the fit of the first of them,
    so identical windows always end up with identical models.
    """
    first = {}
    for w in windows:
        first.setdefault(tuple(w.codes.tolist()), w)
    distinct = list(first.values())
    jobs = (
        delayed(hmm.fit_window)(
            w.codes, cfg.states, num_symbols, cfg.seed + w.index,
            restarts=cfg.restarts, max_iters=cfg.max_iters, tol=cfg.tol,
        )
        for w in tqdm(distinct, desc="Fitting window HMMs", disable=not cfg.show_progress)
    )
    fit_of = dict(zip(first, Parallel(n_jobs=cfg.n_jobs)(jobs)))
    fits = [fit_of[tuple(w.codes.tolist())] for w in windows]
    n_conv = sum(f.converged for f in fit_of.values())
    logger.info(
        f"Fitted {len(fit_of)} HMMs for {len(fits)} windows ({cfg.states} states), "
        f"{n_conv} converged"
    )
    return fits


def dump_models(windows, fits, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for w, fit in zip(windows, fits):
        payload = {
            "window_id": w.window_id, "start": w.start,
            "params": fit.params.to_dict(),
            "log_likelihood_trace": fit.log_likelihood_trace,
            "converged": fit.converged,
        }
        written.append(write_json(payload, directory / f"window_{w.window_id:05d}.json"))
    return written


def features_frame(window_ids, starts, features):
    df = pd.DataFrame(features, columns=[f"g{i + 1}" for i in range(features.shape[1])])
    df.insert(0, "start", np.asarray(starts, dtype=np.int64))
    df.insert(0, "window_id", np.asarray(window_ids, dtype=np.int64))
    return df


def load_features(path):
    """Read a features.csv back: (window_ids, starts, matrix)."""
    try:
        df = read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputError(f"cannot read features {path}: {e}") from e
    gauge_cols = [c for c in df.columns if c.startswith("g")]
    if "window_id" not in df.columns or "start" not in df.columns or not gauge_cols:
        raise InputError(f"{path} needs window_id, start and g1..gM columns")
    return (df["window_id"].to_numpy(), df["start"].to_numpy(),
            df[gauge_cols].to_numpy(dtype=float))


def run(cfg, labels=None):
    """
    Execute the full chain and write all artifacts; returns the OutlierReport.

    labels: optional set of anomalous window ids; read from cfg.labels_path
    when not given. Any failure raises StageError naming the stage, after
    removing whatever artifacts this run had already written.
    """
    cfg.validate()
    timings = {}
    written = []
    out_dir = Path(cfg.out_dir)
    try:
        alphabet = None
        if cfg.features_in is not None:
            with _stage("features", timings):
                window_ids, starts, features = load_features(cfg.features_in)
                features, clamped = gauge.clamp_features(features, cfg.loglik_floor)
        else:
            with _stage("ingest", timings):
                series = events.read_events(cfg.input_path, cfg.input_format, cfg.app)
                windows = events.extract_windows(series, cfg.window_size, cfg.effective_shift)
                alphabet = list(series.alphabet.symbols)
                window_ids = [w.window_id for w in windows]
                starts = [w.start for w in windows]

            with _stage("fit", timings):
                fits = fit_windows(windows, series.alphabet.size, cfg)
                if cfg.dump_models is not None:
                    written.extend(dump_models(windows, fits, cfg.dump_models))

            with _stage("features", timings):
                gauges = gauge.select_gauges(
                    windows, series.alphabet, cfg.gauge_mode, cfg.gauge_count,
                    cfg.effective_gauge_seed,
                )
                raw = gauge.feature_matrix(fits, gauges)
                features, clamped = gauge.clamp_features(raw, cfg.loglik_floor)
                if cfg.dump_features:
                    written.append(write_csv(
                        features_frame(window_ids, starts, features),
                        out_dir / config.FEATURES_FILE, logger,
                    ))

        with _stage("embed", timings):
            embedding = embed.tsne(
                features, perplexity=cfg.perplexity, iters=cfg.tsne_iters,
                learning_rate=cfg.tsne_learning_rate, seed=cfg.effective_tsne_seed,
            )

        with _stage("cluster", timings):
            # Median-centered, per-axis interquartile units; epsilon is measured in these
            scaled = RobustScaler().fit_transform(embedding.points)
            result = cluster.hdbscan(
                scaled, cfg.min_cluster_size, cfg.min_samples,
                cluster_selection_epsilon=cfg.cluster_selection_epsilon,
            )

        window_ids = np.asarray(window_ids, dtype=np.int64)
        table = pd.DataFrame({
            "window_id": window_ids,
            "k": window_ids + 1,
            "start": np.asarray(starts, dtype=np.int64),
            "label": result.labels,
            "x": embedding.points[:, 0],
            "y": embedding.points[:, 1],
            "anomaly": result.labels == cluster.NOISE,
        })

        metrics = None
        if labels is None and cfg.labels_path is not None:
            with _stage("labels", timings):
                labels, total = load_labels(cfg.labels_path)
                if total != len(table):
                    raise InputError(
                        f"labels cover {total} windows but {len(table)} were extracted"
                    )
        if labels is not None:
            with _stage("evaluate", timings):
                positions = {int(w): i for i, w in enumerate(window_ids)}
                detected = [positions[int(w)] for w in table.loc[table["anomaly"], "window_id"]]
                labeled = [positions[int(w)] for w in labels if int(w) in positions]
                if len(labeled) != len(labels):
                    raise InputError("labels name windows that were not extracted")
                metrics = score(detected, labeled, len(table)).to_dict()
                logger.info(
                    f"Precision {metrics['precision']:.3f}, recall {metrics['recall']:.3f}, "
                    f"F1 {metrics['f1']:.3f}"
                )

        report = OutlierReport(
            windows=table, config=cfg.to_dict(), num_clusters=result.num_clusters,
            clamped_entries=clamped, alphabet=alphabet, gauge_count=int(features.shape[1]),
            metrics=metrics, timings=timings,
        )

        with _stage("write", timings):
            out_dir.mkdir(parents=True, exist_ok=True)
            written.append(write_csv(
                table[["window_id", "x", "y"]], out_dir / config.EMBEDDING_FILE, logger))
            written.append(write_csv(
                table[["window_id", "label"]], out_dir / config.CLUSTERS_FILE, logger))
            plot_path = out_dir / config.PLOT_FILE
            written.append(plot_path)
            plot_path.write_text(render_svg(embedding.points, result.labels), encoding="utf-8")
            report_path = out_dir / config.REPORT_FILE
            written.append(report_path)
            report_path.write_text(report.to_json(), encoding="utf-8")
        written.append(write_json(timings, out_dir / config.TIMINGS_FILE))
    except StageError as e:
        logger.error(str(e))
        remove_artifacts(written, logger)
        remove_artifacts([cfg.dump_models] if cfg.dump_models else [])
        remove_artifacts([out_dir])
        raise

    logger.info(
        f"{len(report.outlier_ids)} outliers among {len(table)} windows; "
        f"artifacts in {out_dir}"
    )
    return report
