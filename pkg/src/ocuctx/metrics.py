"""Pixel-level confusion counting and the per-class scoring metrics.

All three scores are one-vs-rest over a selected class: F-score, Error Rate
(fraction of disagreeing pixels over the whole grid) and IoU/Jaccard.  The
Jaccard distance ``theta = 1 - iou`` is carried alongside because the
context coefficients are built from it.

Vacuous agreement (class absent in both masks) scores f_score = 1,
iou = 1, theta = 0, error_rate = 0: absence agreement is agreement and it
keeps aggregation totals defined.  A class present in exactly one mask
scores iou = 0, theta = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PairMismatchError
from .masks import BinaryMask, LabelMask, binarize, validate_pair

__all__ = [
    "ConfusionCounts",
    "ClassMetrics",
    "confusion_counts",
    "f_score",
    "error_rate",
    "jaccard",
    "theta",
    "class_metrics",
]


@dataclass(frozen=True)
class ConfusionCounts:
    """TP/FP/FN/TN pixel tallies for one class of one image pair."""

    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class ClassMetrics:
    """The three protocol scores plus the Jaccard distance for one class."""

    f_score: float
    error_rate: float
    iou: float
    theta: float


def confusion_counts(gt: BinaryMask, pred: BinaryMask) -> ConfusionCounts:
    """Count pixels set in both / only pred / only gt / neither."""
    if gt.membership.shape != pred.membership.shape:
        raise PairMismatchError(
            f"dimension mismatch: gt is {gt.width}x{gt.height}, "
            f"pred is {pred.width}x{pred.height}"
        )
    g = gt.membership
    p = pred.membership
    tp = int(np.count_nonzero(g & p))
    fp = int(np.count_nonzero(~g & p))
    fn = int(np.count_nonzero(g & ~p))
    tn = g.size - tp - fp - fn
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def f_score(c: ConfusionCounts) -> float:
    """2*tp / (2*tp + fp + fn); 1.0 when both masks are empty."""
    denom = 2 * c.tp + c.fp + c.fn
    if denom == 0:
        return 1.0
    return 2 * c.tp / denom


def error_rate(c: ConfusionCounts) -> float:
    """Fraction of pixels where prediction and ground truth disagree."""
    return (c.fp + c.fn) / c.total


def jaccard(c: ConfusionCounts) -> float:
    """Intersection over union; 1.0 when both masks are empty."""
    denom = c.tp + c.fp + c.fn
    if denom == 0:
        return 1.0
    return c.tp / denom


def theta(c: ConfusionCounts) -> float:
    """Jaccard distance, 1 - jaccard."""
    return 1.0 - jaccard(c)


def class_metrics(gt: LabelMask, pred: LabelMask, label: int) -> ClassMetrics:
    """Binarize both masks at ``label`` and score one confusion count."""
    validate_pair(gt, pred)
    counts = confusion_counts(binarize(gt, label), binarize(pred, label))
    j = jaccard(counts)
    return ClassMetrics(
        f_score=f_score(counts),
        error_rate=error_rate(counts),
        iou=j,
        theta=1.0 - j,
    )
