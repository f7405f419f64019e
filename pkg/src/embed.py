"""
Exact t-SNE: perplexity-calibrated input affinities and KL gradient descent
to a 2D embedding of the gauge feature vectors.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform

import config
from src.errors import ConfigError, InputError, NumericalError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class AffinityMatrix:
    P: np.ndarray
    perplexity: float
    betas: np.ndarray
    entropies: np.ndarray


@dataclass(eq=False)
class Embedding2D:
    points: np.ndarray
    kl_trace: list = field(default_factory=list)


def _row_entropy(distances, beta):
    """Conditional distribution for one point at precision beta and its entropy (nats)."""
    logits = -(distances - distances.min()) * beta
    probs = np.exp(logits)
    probs /= probs.sum()
    nonzero = probs > 0
    entropy = -np.sum(probs[nonzero] * np.log(probs[nonzero]))
    return entropy, probs


def _calibrate_row(distances, log_perplexity, tol, max_steps):
    """Binary search on the precision beta until the row entropy equals ln(perplexity)."""
    beta = 1.0
    beta_min, beta_max = -np.inf, np.inf
    entropy, probs = _row_entropy(distances, beta)
    for _ in range(max_steps):
        diff = entropy - log_perplexity
        if abs(diff) <= tol:
            break
        if diff > 0:
            beta_min = beta
            beta = beta * 2.0 if np.isinf(beta_max) else (beta + beta_max) / 2.0
        else:
            beta_max = beta
            beta = beta / 2.0 if np.isinf(beta_min) else (beta + beta_min) / 2.0
        entropy, probs = _row_entropy(distances, beta)
    return beta, entropy, probs


def affinities(features, perplexity=config.PERPLEXITY, tol=config.ENTROPY_TOL):
    """
    Symmetric joint probabilities P_ij = (p_j|i + p_i|j) / 2K with every
    conditional row calibrated to the target perplexity.
    """
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[0] < 2:
        raise InputError("need a (K, d) feature matrix with K >= 2")
    if not np.all(np.isfinite(features)):
        raise InputError("features must be finite (clamp -inf first)")
    count = features.shape[0]
    if perplexity <= 1:
        raise ConfigError("perplexity must be greater than 1")
    if perplexity > count - 1:
        raise ConfigError(f"perplexity too large for {count} points")

    sq_dist = squareform(pdist(features, "sqeuclidean"))
    log_u = np.log(perplexity)
    conditional = np.zeros((count, count))
    betas = np.zeros(count)
    entropies = np.zeros(count)
    others = np.ones(count, dtype=bool)
    for i in range(count):
        others[i] = False
        betas[i], entropies[i], conditional[i, others] = _calibrate_row(
            sq_dist[i, others], log_u, tol, config.PERPLEXITY_SEARCH_STEPS,
        )
        others[i] = True

    off = np.abs(entropies - log_u)
    if np.any(off > 1e-4):
        logger.warning(
            f"{int(np.sum(off > 1e-4))} rows missed the perplexity target "
            f"(worst |H - ln u| = {off.max():.2e}); duplicated feature rows cap the entropy"
        )
    logger.debug(f"Mean bandwidth sigma: {np.mean(np.sqrt(1.0 / betas)):.4g}")

    joint = (conditional + conditional.T) / (2.0 * count)
    return AffinityMatrix(P=joint, perplexity=perplexity, betas=betas, entropies=entropies)


def _student_kernel(points):
    num = 1.0 / (1.0 + squareform(pdist(points, "sqeuclidean")))
    np.fill_diagonal(num, 0.0)
    return num


def kl_divergence_and_gradient(points, P):
    """KL(P || Q) for the Student-t low-dimensional kernel and its gradient w.r.t. points."""
    num = _student_kernel(points)
    Q = num / num.sum()
    positive = P > 0
    kl = float(np.sum(P[positive] * np.log(P[positive] / Q[positive])))
    weights = (P - Q) * num
    grad = 4.0 * (np.diag(weights.sum(axis=1)) - weights) @ points
    return kl, grad


def _first_occurrence(features, count):
    """Index of the first row equal to each row (identity when features are not given)."""
    if features is None:
        return np.arange(count)
    _, first, inverse = np.unique(
        np.asarray(features, dtype=float), axis=0, return_index=True, return_inverse=True,
    )
    return first[inverse.reshape(-1)]


def tsne(features, perplexity=config.PERPLEXITY, iters=config.TSNE_ITERS,
         learning_rate=config.TSNE_LEARNING_RATE, seed=config.SEED,
         affinity=None):
    """
    Embed the feature rows in 2D.

    Early exaggeration multiplies P for the first iterations, momentum switches
    from the initial to the final value, per-coordinate gains adapt the step,
    and the points are re-centered after every update. kl_trace[0] is the KL of
    the initial layout, followed by one value per iteration.

    Identical feature rows start at the same point and are kept there, so
    repeated windows share one position in the embedding.
    """
    if iters < 1:
        raise ConfigError("t-SNE needs at least one iteration")
    if affinity is None:
        affinity = affinities(features, perplexity)
    P = affinity.P
    count = P.shape[0]
    twin = _first_occurrence(features, count)

    rng = np.random.default_rng(seed)
    points = rng.normal(0.0, config.INIT_STD, size=(count, 2))[twin]
    points -= points.mean(axis=0)
    update = np.zeros_like(points)
    gains = np.ones_like(points)

    kl, _ = kl_divergence_and_gradient(points, P)
    kl_trace = [kl]
    for it in range(iters):
        exaggeration = config.EARLY_EXAGGERATION if it < config.EXAGGERATION_ITERS else 1.0
        momentum = (config.INITIAL_MOMENTUM if it < config.MOMENTUM_SWITCH_ITER
                    else config.FINAL_MOMENTUM)
        _, grad = kl_divergence_and_gradient(points, exaggeration * P)
        if not np.all(np.isfinite(grad)):
            raise NumericalError(f"non-finite t-SNE gradient at iteration {it}")

        same_sign = (grad > 0) == (update > 0)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, config.MIN_GAIN)
        update = (momentum * update - learning_rate * gains * grad)[twin]
        gains = gains[twin]
        points = points[twin] + update
        points -= points.mean(axis=0)

        kl, _ = kl_divergence_and_gradient(points, P)
        kl_trace.append(kl)
        if (it + 1) % 250 == 0:
            logger.debug(f"t-SNE iteration {it + 1}: KL = {kl:.6f}")

    if kl_trace[-1] > kl_trace[0]:
        logger.warning(
            f"t-SNE ended above its starting KL ({kl_trace[-1]:.6f} > {kl_trace[0]:.6f})"
        )
    logger.info(f"t-SNE finished: {count} points, KL {kl_trace[0]:.4f} -> {kl_trace[-1]:.4f}")
    return Embedding2D(points=points, kl_trace=kl_trace)
