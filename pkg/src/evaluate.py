"""Score detected outliers against labeled anomalies."""

import logging
from dataclasses import asdict, dataclass

from src.errors import InputError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Metrics:
    true_positives: int
    false_positives: int
    false_negatives: int
    precision: float
    recall: float
    f1: float
    undefined: bool = False  # some ratio was 0/0 and reported as 0

    def to_dict(self):
        return asdict(self)


def _ratio(num, den):
    return (num / den, False) if den else (0.0, True)


def score(detected, labeled, total):
    """Confusion counts and precision/recall/F1; 0/0 cases give 0 and set `undefined`."""
    detected, labeled = set(detected), set(labeled)
    for name, ids in (("detected", detected), ("labeled", labeled)):
        bad = [i for i in ids if not 0 <= i < total]
        if bad:
            raise InputError(f"{name} ids out of range 0..{total - 1}: {sorted(bad)[:5]}")

    tp = len(detected & labeled)
    fp = len(detected - labeled)
    fn = len(labeled - detected)
    precision, p_undef = _ratio(tp, tp + fp)
    recall, r_undef = _ratio(tp, tp + fn)
    f1, f_undef = _ratio(2 * precision * recall, precision + recall)
    undefined = p_undef or r_undef or f_undef
    if undefined:
        logger.warning("Metric with zero denominator reported as 0")
    return Metrics(
        true_positives=tp, false_positives=fp, false_negatives=fn,
        precision=precision, recall=recall, f1=f1, undefined=undefined,
    )
