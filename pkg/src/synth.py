"""
Synthetic datasets with ground-truth anomaly labels.

exp1: 60 noisy repetitions of (A, B, C, D) x 5 plus a reversed sequence and a
constant sequence. exp2: 500 copies of a sequence whose bigram statistics match
those of the single anomalous sequence, so only a model with memory can tell
them apart. Sequences are pre-cut windows: written back to back, a window size
equal to the sequence length with the same shift recovers them exactly.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from src.errors import ConfigError, InputError
from src.utils import read_csv, write_csv

logger = logging.getLogger(__name__)

NORMAL, ANOMALOUS = 0, 1
EXP1_SYMBOLS = ("A", "B", "C", "D")
EXP1_COPIES = 60
EXP1_ALTERED = 2
EXP2_COPIES = 500


@dataclass(eq=False)
class LabeledDataset:
    windows: list  # list of event-type lists, all the same length
    labels: np.ndarray
    description: str

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.labels) != len(self.windows):
            raise InputError("label count must equal window count")

    @property
    def window_size(self):
        return len(self.windows[0])

    @property
    def anomalous_ids(self):
        return set(np.flatnonzero(self.labels == ANOMALOUS).tolist())

    def events(self):
        return [event for window in self.windows for event in window]


def gen_experiment1(seed):
    """
    60 copies of (A,B,C,D)x5, each with two distinct positions overwritten by a
    uniform draw from {A,B,C,D} (possibly the same symbol), then the reversed
    pattern (D,C,B,A)x5 and the constant A x 20, both labeled anomalous.
    """
    rng = np.random.default_rng(seed)
    template = list(EXP1_SYMBOLS) * 5
    windows = []
    for _ in range(EXP1_COPIES):
        seq = list(template)
        for pos in rng.choice(len(template), size=EXP1_ALTERED, replace=False):
            seq[int(pos)] = EXP1_SYMBOLS[int(rng.integers(len(EXP1_SYMBOLS)))]
        windows.append(seq)
    windows.append(list(reversed(EXP1_SYMBOLS)) * 5)
    windows.append(["A"] * len(template))
    labels = [NORMAL] * EXP1_COPIES + [ANOMALOUS, ANOMALOUS]
    return LabeledDataset(
        windows=windows, labels=labels,
        description=f"exp1: {EXP1_COPIES} noisy (A,B,C,D)x5 + reversed + constant (seed={seed})",
    )


def exp2_sequences():
    t1 = list("AABB") * 5 + ["A"]
    t2 = list("AAAAAA") + list("BBBBBB") + list("AB") * 4 + ["A"]
    return t1, t2


def gen_experiment2():
    """500 copies of t1 = (A,A,B,B)x5 + A followed by one t2 = A x6, B x6, (A,B)x4, A."""
    t1, t2 = exp2_sequences()
    windows = [list(t1) for _ in range(EXP2_COPIES)] + [list(t2)]
    labels = [NORMAL] * EXP2_COPIES + [ANOMALOUS]
    return LabeledDataset(
        windows=windows, labels=labels,
        description=f"exp2: {EXP2_COPIES} copies of t1 + one t2 with identical bigram statistics",
    )


def generate(name, seed=0):
    if name == "exp1":
        return gen_experiment1(seed)
    if name == "exp2":
        return gen_experiment2()
    raise ConfigError(f"unknown synthetic experiment {name!r}")


def bigram_transition_matrix(seq, symbols):
    """Row-normalized first-order transition counts (the Markov-chain fit of seq)."""
    index = {s: i for i, s in enumerate(symbols)}
    counts = np.zeros((len(symbols), len(symbols)))
    for a, b in zip(seq[:-1], seq[1:]):
        counts[index[a], index[b]] += 1
    totals = counts.sum(axis=1, keepdims=True)
    return np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)


def labels_path_for(events_path):
    events_path = Path(events_path)
    return events_path.with_name(f"{events_path.stem}.labels.csv")


def write_dataset(dataset, out_path, logger=logger):
    """Write events one per line plus a window_id,label sidecar; returns both paths."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text("".join(f"{e}\n" for e in dataset.events()), encoding="utf-8")
    labels = pd.DataFrame({
        "window_id": np.arange(len(dataset.labels)),
        "label": dataset.labels,
    })
    sidecar = write_csv(labels, labels_path_for(out_path))
    logger.info(
        f"Wrote {len(dataset.windows)} windows of length {dataset.window_size} to {out_path} "
        f"({len(dataset.anomalous_ids)} anomalous)"
    )
    return out_path, sidecar


def load_labels(path):
    """Read a window_id,label CSV; returns (anomalous id set, total windows)."""
    try:
        df = read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputError(f"cannot read labels {path}: {e}") from e
    if not {"window_id", "label"} <= set(df.columns):
        raise InputError(f"labels file {path} needs window_id and label columns")
    if not df["label"].isin([NORMAL, ANOMALOUS]).all():
        raise InputError("labels must be 0 or 1")
    return set(df.loc[df["label"] == ANOMALOUS, "window_id"].astype(int)), len(df)
