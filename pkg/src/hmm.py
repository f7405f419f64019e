"""
Discrete-emission hidden Markov models.

Seeded random initialization, the scaled forward algorithm for sequence
log-likelihoods, and Baum-Welch (EM) training of one model per window.
"""

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

import config
from src.errors import ConfigError, InputError, NumericalError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class HmmParams:
    """Initial distribution pi (S), transitions trans (S x S), emissions emit (S x A)."""

    pi: np.ndarray
    trans: np.ndarray
    emit: np.ndarray

    def __post_init__(self):
        pi = np.array(self.pi, dtype=float)
        trans = np.array(self.trans, dtype=float)
        emit = np.array(self.emit, dtype=float)
        states = pi.shape[0]
        if pi.ndim != 1 or trans.shape != (states, states) or emit.ndim != 2 \
                or emit.shape[0] != states:
            raise ConfigError(
                f"inconsistent HMM shapes pi={pi.shape} trans={trans.shape} emit={emit.shape}"
            )
        for name, rows in (("pi", pi[None, :]), ("trans", trans), ("emit", emit)):
            if np.any(rows < 0) or not np.allclose(rows.sum(axis=1), 1.0,
                                                   rtol=0, atol=config.ROW_SUM_TOL):
                raise ConfigError(f"{name} rows must be non-negative and sum to 1")
        for arr in (pi, trans, emit):
            arr.setflags(write=False)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "trans", trans)
        object.__setattr__(self, "emit", emit)

    @property
    def num_states(self):
        return self.pi.shape[0]

    @property
    def num_symbols(self):
        return self.emit.shape[1]

    def permuted(self, order):
        """Relabel states: new state i is old state order[i]. Same distribution, new parameters."""
        order = np.asarray(order)
        return HmmParams(
            pi=self.pi[order],
            trans=self.trans[np.ix_(order, order)],
            emit=self.emit[order],
        )

    def to_dict(self):
        return {"pi": self.pi.tolist(), "trans": self.trans.tolist(), "emit": self.emit.tolist()}


@dataclass
class FitReport:
    params: HmmParams
    log_likelihood_trace: list = field(default_factory=list)
    iterations_run: int = 0
    converged: bool = False

    @property
    def log_likelihood(self):
        return self.log_likelihood_trace[-1]


class ConvergenceMonitor:
    """Tracks the per-iteration log-likelihood and decides when EM stops."""

    def __init__(self, tol, n_iter):
        self.tol = tol
        self.n_iter = n_iter
        self.history = deque()
        self.iter = 0

    def report(self, log_prob):
        if self.history:
            logger.debug(
                f"iter {self.iter + 1:>4d} log_prob {log_prob:>14.6f} "
                f"delta {log_prob - self.history[-1]:>+12.3e}"
            )
        self.history.append(log_prob)
        self.iter += 1

    @property
    def improved(self):
        return len(self.history) < 2 or self.history[-1] >= self.history[-2]

    @property
    def converged(self):
        return (len(self.history) >= 2
                and self.history[-1] - self.history[-2] < self.tol)

    @property
    def exhausted(self):
        return self.iter >= self.n_iter


def _check_counts(num_states, num_symbols):
    if num_states < 1 or num_symbols < 1:
        raise ConfigError(
            f"need at least one state and one symbol (got S={num_states}, A={num_symbols})"
        )


def _as_codes(seq, num_symbols):
    codes = np.asarray(seq, dtype=np.int64)
    if codes.ndim != 1 or codes.size == 0:
        raise InputError("sequence must be a nonempty 1-D code sequence")
    if codes.min() < 0 or codes.max() >= num_symbols:
        raise InputError(f"code out of range for {num_symbols} symbols")
    return codes


def init_random(num_states, num_symbols, seed):
    """Every row of pi, trans and emit drawn from a symmetric Dirichlet(1)."""
    _check_counts(num_states, num_symbols)
    rng = np.random.default_rng(seed)
    pi = rng.dirichlet(np.ones(num_states))
    trans = rng.dirichlet(np.ones(num_states), size=num_states)
    emit = rng.dirichlet(np.ones(num_symbols), size=num_states)
    return HmmParams(pi=pi, trans=trans, emit=emit)


def log_likelihoods(h, sequences):
    """
    ln p_h(s) for every row s of a (G, n) code matrix, by the scaled forward
    algorithm run on all rows at once. Rows of probability zero give -inf.
    """
    seqs = np.asarray(sequences, dtype=np.int64)
    if seqs.ndim != 2 or seqs.shape[1] == 0:
        raise InputError("expected a nonempty (count, length) code matrix")
    if seqs.size and (seqs.min() < 0 or seqs.max() >= h.num_symbols):
        raise InputError(f"code out of range for {h.num_symbols} symbols")

    count = seqs.shape[0]
    log_prob = np.zeros(count)
    alive = np.ones(count, dtype=bool)
    alpha = h.pi[None, :] * h.emit[:, seqs[:, 0]].T
    for t in range(seqs.shape[1]):
        if t > 0:
            alpha = (alpha @ h.trans) * h.emit[:, seqs[:, t]].T
        scale = alpha.sum(axis=1)
        dead = scale <= 0.0
        alive &= ~dead
        scale[dead] = 1.0
        alpha /= scale[:, None]
        log_prob += np.log(scale)
    log_prob[~alive] = -np.inf
    return log_prob


def log_likelihood(h, seq):
    """ln p_h(seq); exactly -inf when the sequence has probability zero."""
    codes = _as_codes(seq, h.num_symbols)
    return float(log_likelihoods(h, codes[None, :])[0])


def _forward_backward(h, codes):
    """Scaled forward-backward pass: (log_prob, gamma, expected transition counts)."""
    length = codes.size
    states = h.num_states
    obs = h.emit[:, codes].T  # (T, S)

    alpha = np.zeros((length, states))
    scale = np.zeros(length)
    alpha[0] = h.pi * obs[0]
    for t in range(length):
        if t > 0:
            alpha[t] = (alpha[t - 1] @ h.trans) * obs[t]
        scale[t] = alpha[t].sum()
        if not scale[t] > 0:
            raise NumericalError(f"forward pass underflow at position {t}")
        alpha[t] /= scale[t]

    beta = np.ones((length, states))
    xi_sum = np.zeros((states, states))
    for t in range(length - 2, -1, -1):
        weighted = obs[t + 1] * beta[t + 1] / scale[t + 1]
        beta[t] = h.trans @ weighted
        xi_sum += alpha[t][:, None] * h.trans * weighted[None, :]

    gamma = alpha * beta
    return float(np.log(scale).sum()), gamma, xi_sum


def _floor_rows(rows, floor):
    rows = rows + floor
    return rows / rows.sum(axis=-1, keepdims=True)


def _reestimate(codes, gamma, xi_sum, num_symbols, floor):
    pi = _floor_rows(gamma[0], floor)
    trans = _floor_rows(xi_sum, floor)
    emit = np.zeros((gamma.shape[1], num_symbols))
    np.add.at(emit.T, codes, gamma)
    emit = _floor_rows(emit, floor)
    return HmmParams(pi=pi, trans=trans, emit=emit)


def baum_welch(seq, num_states, seed, max_iters=config.BW_MAX_ITERS,
               tol=config.BW_TOL, num_symbols=None, floor=config.EMISSION_FLOOR):
    """
    Fit an HMM to a single code sequence by EM from a seeded random start.

    The trace holds log p(seq | params) for each E-step. Re-estimated rows get
    an additive floor before renormalizing, so no probability becomes exactly
    zero. If flooring ever makes an update score lower than its predecessor the
    update is discarded and training stops, keeping the trace non-decreasing.
    """
    if np.size(seq) == 0:
        raise InputError("Baum-Welch needs a nonempty sequence")
    if num_symbols is None:
        num_symbols = int(np.max(seq)) + 1
    codes = _as_codes(seq, num_symbols)
    if codes.size < 2:
        raise InputError("Baum-Welch needs a sequence of length >= 2")
    if max_iters < 1:
        raise ConfigError("max_iters must be at least 1")

    params = init_random(num_states, num_symbols, seed)
    monitor = ConvergenceMonitor(tol, max_iters)
    previous = None
    converged = False
    while True:
        log_prob, gamma, xi_sum = _forward_backward(params, codes)
        monitor.report(log_prob)
        if not monitor.improved:
            monitor.history.pop()
            params = previous
            converged = True
            break
        if monitor.converged:
            converged = True
            break
        if monitor.exhausted:
            break
        previous = params
        params = _reestimate(codes, gamma, xi_sum, num_symbols, floor)

    trace = list(monitor.history)
    return FitReport(
        params=params,
        log_likelihood_trace=trace,
        iterations_run=len(trace),
        converged=converged,
    )


def fit_window(seq, num_states, num_symbols, seed, restarts=config.RESTARTS,
               max_iters=config.BW_MAX_ITERS, tol=config.BW_TOL):
    """Best (highest final log-likelihood) of `restarts` Baum-Welch runs."""
    if restarts < 1:
        raise ConfigError("restarts must be at least 1")
    best = None
    for r in range(restarts):
        report = baum_welch(
            seq, num_states, seed + r * config.RESTART_SEED_STRIDE,
            max_iters=max_iters, tol=tol, num_symbols=num_symbols,
        )
        if best is None or report.log_likelihood > best.log_likelihood:
            best = report
    return best
