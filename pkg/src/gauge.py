"""
Gauge sequences and the gauge likelihood map.

Each fitted window model is described by the log-likelihoods it assigns to a
fixed set of gauge sequences; those vectors are the features compared downstream.
"""

import logging
from dataclasses import dataclass

import numpy as np

import config
from src.errors import ConfigError, InputError
from src.hmm import log_likelihoods

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GaugeSet:
    sequences: np.ndarray  # (count, n)
    mode: str

    @property
    def count(self):
        return self.sequences.shape[0]

    @property
    def length(self):
        return self.sequences.shape[1]


@dataclass(frozen=True, eq=False)
class GaugeVector:
    window_id: int
    values: np.ndarray


def select_gauges(windows, alphabet, mode=config.GAUGE_MODE, count=config.GAUGE_COUNT,
                  seed=config.SEED):
    """
    random: `count` iid uniform sequences over the alphabet, window length long.
    self: the windows' own code sequences in window order, first occurrence kept.
    """
    if not windows:
        raise InputError("cannot select gauges from an empty window list")
    length = len(windows[0])
    if mode == "random":
        if count < 1:
            raise ConfigError("gauge count must be at least 1")
        if count < 5:
            logger.warning(f"Only {count} random gauges; fewer than 5 tends to blur clusters")
        rng = np.random.default_rng(seed)
        sequences = rng.integers(0, alphabet.size, size=(count, length))
    elif mode == "self":
        unique = dict.fromkeys(tuple(int(c) for c in w.codes) for w in windows)
        sequences = np.array(list(unique), dtype=np.int64)
    else:
        raise ConfigError(f"unknown gauge mode {mode!r}")

    sequences.setflags(write=False)
    logger.info(f"Selected {sequences.shape[0]} gauge sequences ({mode} mode)")
    return GaugeSet(sequences=sequences, mode=mode)


def gauge_vector(h, gauges, window_id=0):
    """values[i] = ln p_h(g_i)."""
    return GaugeVector(window_id=window_id, values=log_likelihoods(h, gauges.sequences))


def feature_matrix(fits, gauges):
    """K x count matrix; row k is the gauge vector of fits[k]."""
    if not fits:
        raise InputError("no fitted models")
    symbols = {fit.params.num_symbols for fit in fits}
    if len(symbols) != 1:
        raise InputError(f"dimension mismatch: models disagree on symbol count {sorted(symbols)}")
    if gauges.sequences.max() >= symbols.pop():
        raise InputError("dimension mismatch: gauge codes exceed the models' symbol count")

    rows = [gauge_vector(fit.params, gauges, window_id=k).values for k, fit in enumerate(fits)]
    return np.vstack(rows)


def clamp_features(features, floor=config.LOGLIK_FLOOR):
    """Replace -inf (and anything below floor) by floor; returns (matrix, clamped count)."""
    features = np.asarray(features, dtype=float)
    if np.any(np.isnan(features)) or np.any(features == np.inf):
        raise InputError("feature matrix contains NaN or +inf")
    below = features < floor
    clamped = np.where(below, floor, features)
    count = int(below.sum())
    if count:
        logger.info(f"Clamped {count} gauge log-likelihoods to {floor}")
    return clamped, count
