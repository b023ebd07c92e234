"""Context coefficients and the punish-context loss over a mask pair.

Three scalar summaries of how a predicted mask disagrees with the ground
truth beyond per-pixel overlap:

* scale coefficient (lambda): mean pairwise absolute difference of the
  per-class Jaccard distances -- how *unevenly* the classes are
  mis-segmented.  Always in [0, 1].
* spatial coefficient (delta): mean pairwise Euclidean distance between the
  class centroids within one mask -- the spatial layout of the classes.
* spatial ratio (rho): delta(pred) / delta(gt).  1 means the prediction
  preserved the layout; it is unbounded above.

The punish-context loss is their blend ``pc_loss = (lambda + rho) / 2`` and
is applied to an external base loss either multiplicatively
(``base * (1 + pc_loss)``) or additively.  Note the fixed point: a perfect
prediction yields lambda = 0, rho = 1 and therefore pc_loss = 0.5, not 0.

Which classes participate is governed by ``ClassSpec.context_labels``
(background included by default).  Degenerate geometry never raises and
never yields NaN: an empty class simply has no centroid, and when fewer
than two centroids exist in both masks -- or the ground-truth spread falls
below ``epsilon_delta`` -- rho is pinned to 0 and the cause is reported in
the ``degenerate`` flag set.

Everything operates on hard label masks; none of these quantities is
differentiable and no gradient support is offered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .masks import BinaryMask, ClassSpec, LabelMask, binarize, validate_pair
from .metrics import confusion_counts, theta as jaccard_distance

__all__ = [
    "Centroid",
    "ContextConfig",
    "ContextResult",
    "DegeneracyFlag",
    "PunishMode",
    "SpatialSpread",
    "ScaleSpread",
    "SpatialRatio",
    "centroid",
    "spatial_coefficient",
    "scale_coefficient",
    "spatial_ratio",
    "pc_loss",
    "punish",
]


class DegeneracyFlag(str, Enum):
    PRED_CLASS_EMPTY = "PRED_CLASS_EMPTY"
    GT_CLASS_EMPTY = "GT_CLASS_EMPTY"
    DELTA_GT_NEAR_ZERO = "DELTA_GT_NEAR_ZERO"
    SINGLE_CLASS = "SINGLE_CLASS"


class PunishMode(str, Enum):
    MULTIPLICATIVE = "multiplicative"
    ADDITIVE = "additive"


@dataclass(frozen=True)
class Centroid:
    """Center of mass of a class region, in (row, col) pixel coordinates."""

    row: float
    col: float
    pixel_count: int


@dataclass(frozen=True)
class ContextConfig:
    spec: ClassSpec
    punish_mode: PunishMode = PunishMode.MULTIPLICATIVE


@dataclass(frozen=True)
class ContextResult:
    """Everything the context computation produced for one image pair.

    ``pc_loss == (lambda_ + rho) / 2`` holds for every input, degenerate or
    not.  ``thetas`` is keyed by class name in context order.
    """

    thetas: dict[str, float]
    lambda_: float
    delta_gt: float
    delta_pred: float
    rho: float
    pc_loss: float
    degenerate: frozenset[DegeneracyFlag]


class SpatialSpread(NamedTuple):
    delta: float
    usable_labels: tuple[int, ...]


class ScaleSpread(NamedTuple):
    lambda_: float
    thetas: dict[str, float]


class SpatialRatio(NamedTuple):
    rho: float
    delta_gt: float
    delta_pred: float
    flags: frozenset[DegeneracyFlag]


def centroid(mask: BinaryMask) -> Centroid | None:
    """Mean (row, col) of the member pixels; None when the class is empty."""
    sums = _coordinate_sums(mask)
    if sums is None:
        return None
    sum_row, sum_col, count = sums
    return Centroid(row=sum_row / count, col=sum_col / count, pixel_count=count)


def _coordinate_sums(mask: BinaryMask) -> tuple[int, int, int] | None:
    """Exact integer (sum of rows, sum of cols, count) over member pixels."""
    rows, cols = np.nonzero(mask.membership)
    if rows.size == 0:
        return None
    return int(rows.sum()), int(cols.sum()), int(rows.size)


def _centroid_distance(a: tuple[int, int, int], b: tuple[int, int, int]) -> float:
    """Euclidean distance between two class centroids.

    The coordinate differences are formed by cross-multiplying the exact
    integer sums instead of subtracting two rounded means, so rigid motions
    of the grid (translation, rotation, flips) and nearest-neighbour
    upscaling change the result exactly as they change the mathematics --
    bit for bit, not merely within rounding noise.
    """
    ar, ac, an = a
    br, bc, bn = b
    den = an * bn
    return math.hypot((ar * bn - br * an) / den, (ac * bn - bc * an) / den)


def _mean_pairwise(values: list[float], distance) -> float:
    """(1/N) sum_i (1/(N-1)) sum_{j != i} distance(v_i, v_j), N >= 2.

    Callers pass ``values`` in ascending label order so the summation order
    (and therefore the float result, bit for bit) cannot depend on how the
    spec happens to order its classes.
    """
    n = len(values)
    total = 0.0
    for i in range(n):
        inner = 0.0
        for j in range(n):
            if j != i:
                inner += distance(values[i], values[j])
        total += inner / (n - 1)
    return total / n


def _sums_by_label(
    mask: LabelMask, labels: tuple[int, ...]
) -> dict[int, tuple[int, int, int] | None]:
    """Per-label exact integer (row sum, col sum, count).

    Foreground classes are scanned directly; the background, typically most
    of the grid, is derived by subtracting every foreground class from the
    closed-form whole-grid totals.
    """
    spec = mask.spec
    bg = spec.background_label
    scan = set(spec.foreground_labels) if bg in labels else {l for l in labels if l != bg}
    sums: dict[int, tuple[int, int, int] | None] = {}
    for label in scan:
        rows, cols = np.nonzero(mask.labels == label)
        sums[label] = (
            None
            if rows.size == 0
            else (int(rows.sum()), int(cols.sum()), int(rows.size))
        )
    if bg in labels:
        h, w = mask.labels.shape
        fg = [sums[label] for label in spec.foreground_labels if sums[label] is not None]
        count = h * w - sum(s[2] for s in fg)
        row_sum = w * (h * (h - 1) // 2) - sum(s[0] for s in fg)
        col_sum = h * (w * (w - 1) // 2) - sum(s[1] for s in fg)
        sums[bg] = None if count == 0 else (row_sum, col_sum, count)
    return {label: sums[label] for label in labels}


def spatial_coefficient(mask: LabelMask, cfg: ContextConfig) -> SpatialSpread:
    """Mean pairwise centroid distance over the classes present in ``mask``.

    Classes without pixels contribute no centroid; with fewer than two
    centroids the spread is 0 and ``usable_labels`` exposes the shortfall.
    """
    sums = _sums_by_label(mask, cfg.spec.context_labels)
    usable = tuple(sorted(label for label, s in sums.items() if s is not None))
    if len(usable) < 2:
        return SpatialSpread(0.0, usable)
    points = [sums[label] for label in usable]
    return SpatialSpread(_mean_pairwise(points, _centroid_distance), usable)


def scale_coefficient(gt: LabelMask, pred: LabelMask, cfg: ContextConfig) -> ScaleSpread:
    """Mean pairwise spread of the per-class Jaccard distances.

    With a single context class the spread is undefined, and the lone
    Jaccard distance itself is returned (callers flag SINGLE_CLASS).
    """
    validate_pair(gt, pred)
    spec = cfg.spec
    theta_by_label: dict[int, float] = {}
    for label in spec.context_labels:
        counts = confusion_counts(binarize(gt, label), binarize(pred, label))
        theta_by_label[label] = jaccard_distance(counts)
    thetas = {spec.name_of(label): theta_by_label[label] for label in spec.context_labels}
    values = [theta_by_label[label] for label in sorted(theta_by_label)]
    if len(values) == 1:
        return ScaleSpread(values[0], thetas)
    lam = _mean_pairwise(values, lambda a, b: abs(a - b))
    return ScaleSpread(lam, thetas)


def spatial_ratio(gt: LabelMask, pred: LabelMask, cfg: ContextConfig) -> SpatialRatio:
    """delta(pred) / delta(gt) over the classes usable in *both* masks.

    Both spreads are computed on the common usable class set so the ratio
    compares like with like.  Degenerate inputs pin rho to 0 and report why.
    """
    validate_pair(gt, pred)
    labels = cfg.spec.context_labels
    gt_sums = _sums_by_label(gt, labels)
    pred_sums = _sums_by_label(pred, labels)

    flags = set()
    if len(labels) < 2:
        flags.add(DegeneracyFlag.SINGLE_CLASS)
    if any(s is None for s in gt_sums.values()):
        flags.add(DegeneracyFlag.GT_CLASS_EMPTY)
    if any(s is None for s in pred_sums.values()):
        flags.add(DegeneracyFlag.PRED_CLASS_EMPTY)

    common = tuple(
        sorted(
            label
            for label in labels
            if gt_sums[label] is not None and pred_sums[label] is not None
        )
    )
    if len(common) < 2:
        return SpatialRatio(0.0, 0.0, 0.0, frozenset(flags))

    delta_gt = _mean_pairwise([gt_sums[label] for label in common], _centroid_distance)
    delta_pred = _mean_pairwise([pred_sums[label] for label in common], _centroid_distance)
    if delta_gt < cfg.spec.epsilon_delta:
        flags.add(DegeneracyFlag.DELTA_GT_NEAR_ZERO)
        return SpatialRatio(0.0, delta_gt, delta_pred, frozenset(flags))
    return SpatialRatio(delta_pred / delta_gt, delta_gt, delta_pred, frozenset(flags))


def pc_loss(gt: LabelMask, pred: LabelMask, cfg: ContextConfig) -> ContextResult:
    """Assemble the context coefficients and their blend for one pair."""
    lam, thetas = scale_coefficient(gt, pred, cfg)
    rho, delta_gt, delta_pred, flags = spatial_ratio(gt, pred, cfg)
    return ContextResult(
        thetas=thetas,
        lambda_=lam,
        delta_gt=delta_gt,
        delta_pred=delta_pred,
        rho=rho,
        pc_loss=(lam + rho) / 2.0,
        degenerate=flags,
    )


def punish(base_loss: float, ctx: ContextResult, cfg: ContextConfig) -> float:
    """Apply the context penalty to an external base loss value."""
    if base_loss < 0:
        raise ValueError(f"base loss must be non-negative, got {base_loss}")
    if cfg.punish_mode is PunishMode.ADDITIVE:
        return base_loss + ctx.pc_loss
    return base_loss * (1.0 + ctx.pc_loss)
