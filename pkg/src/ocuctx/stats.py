"""Wilcoxon signed-rank test for paired per-image metric samples.

Zero differences are discarded (classic convention), absolute differences
are ranked with average ranks for ties, and W+ is the rank sum of the
positive differences.

For n <= 25 remaining pairs the two-sided p-value is exact: conditioning on
the observed ranks, each of the 2^n sign assignments is equally likely
under the null, so the distribution of W+ follows from a subset-sum count
over the ranks.  The count is built by dynamic programming on doubled
ranks (average ranks are half-integers, doubling makes them integers; the
table never exceeds n(n+1)+1 = 651 cells).  The two-sided p is
``min(1, 2 * min(P(W+ <= w), P(W+ >= w)))``, identical to what a full
sign-flip enumeration gives.

Beyond n = 25 the usual normal approximation applies, with the tie
correction in the variance and a 0.5 continuity correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateSampleError

__all__ = [
    "Method",
    "TestResult",
    "wilcoxon",
    "pairwise_matrix",
    "signed_rank_distribution",
    "average_ranks",
    "EXACT_THRESHOLD",
]

EXACT_THRESHOLD = 25


class Method(str, Enum):
    EXACT = "EXACT"
    NORMAL_APPROX = "NORMAL_APPROX"


@dataclass(frozen=True)
class TestResult:
    w_plus: float
    n_effective: int
    p_two_sided: float
    method: Method
    alpha: float
    significant: bool


def average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties sharing the average of their rank positions."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        # positions i..j (0-based) hold equal values -> average rank
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def signed_rank_distribution(ranks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Null distribution of W+ conditioned on the observed ranks.

    Returns (support, probabilities).  Counts stay exact in float64 up to
    n = 25 (2^25 subsets < 2^53), so the probabilities sum to 1 exactly.
    """
    doubled = np.rint(2.0 * np.asarray(ranks, dtype=float)).astype(int)
    total = int(doubled.sum())
    counts = np.zeros(total + 1, dtype=float)
    counts[0] = 1.0
    upto = 0
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r : upto + r + 1] = counts[: upto + 1]
        counts += shifted
        upto += r
    probs = counts / (2.0 ** len(doubled))
    support = np.arange(total + 1) / 2.0
    return support, probs


def _exact_p(ranks: np.ndarray, w_plus: float) -> float:
    _, probs = signed_rank_distribution(ranks)
    w2 = int(round(2.0 * w_plus))
    p_le = float(probs[: w2 + 1].sum())
    p_ge = float(probs[w2:].sum())
    return min(1.0, 2.0 * min(p_le, p_ge))


def _normal_p(abs_diffs: np.ndarray, ranks: np.ndarray, w_plus: float) -> float:
    n = len(ranks)
    mu = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, tie_counts = np.unique(abs_diffs, return_counts=True)
    # tie correction never cancels the variance entirely (worst case 3n(n+1)^2/48)
    var -= float((tie_counts**3 - tie_counts).sum()) / 48.0
    d = w_plus - mu
    if d > 0:
        d -= 0.5
    elif d < 0:
        d += 0.5
    z = d / math.sqrt(var)
    return min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))


def wilcoxon(a, b, alpha: float = 0.05) -> TestResult:
    """Two-sided Wilcoxon signed-rank test on index-aligned samples.

    Raises :class:`DegenerateSampleError` when every pairwise difference is
    zero.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    if len(a) != len(b):
        raise ValueError(f"samples differ in length: {len(a)} vs {len(b)}")
    if len(a) == 0:
        raise ValueError("samples are empty")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("samples must be finite")

    diffs = a - b
    diffs = diffs[diffs != 0.0]
    n = len(diffs)
    if n == 0:
        raise DegenerateSampleError("degenerate sample: all pairwise differences are zero")

    abs_diffs = np.abs(diffs)
    ranks = average_ranks(abs_diffs)
    w_plus = float(ranks[diffs > 0].sum())

    if n <= EXACT_THRESHOLD:
        method = Method.EXACT
        p = _exact_p(ranks, w_plus)
    else:
        method = Method.NORMAL_APPROX
        p = _normal_p(abs_diffs, ranks, w_plus)

    return TestResult(
        w_plus=w_plus,
        n_effective=n,
        p_two_sided=p,
        method=method,
        alpha=alpha,
        significant=p < alpha,
    )


def pairwise_matrix(samples: dict[str, list[float]], alpha: float = 0.05) -> dict[str, dict[str, float | None]]:
    """Symmetric matrix of two-sided p-values between named methods.

    Diagonal entries are None.  Pairs whose differences are all zero are
    also None (those methods are indistinguishable on this sample).
    """
    names = list(samples)
    lengths = {name: len(values) for name, values in samples.items()}
    if len(set(lengths.values())) > 1:
        raise ValueError(f"per-method sample lengths differ: {lengths}")
    matrix: dict[str, dict[str, float | None]] = {n: {m: None for m in names} for n in names}
    for i, ni in enumerate(names):
        for nj in names[i + 1 :]:
            try:
                p = wilcoxon(samples[ni], samples[nj], alpha=alpha).p_two_sided
            except DegenerateSampleError:
                p = None
            matrix[ni][nj] = p
            matrix[nj][ni] = p
    return matrix
