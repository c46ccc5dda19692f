"""Significance, effect size and Scott-Knott style grouping of feature importances."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

EXACT_MAX_N = 20
EFFECT_THRESHOLDS = ((0.147, "N"), (0.33, "S"), (0.474, "M"))
EFFECT_ORDER = "NSML"
NEGLIGIBLE = 0.147


# -- Wilcoxon signed-rank ---------------------------------------------------------------

def _signed_ranks(a, b):
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if diff.ndim != 1:
        raise ValueError("paired samples must be one-dimensional")
    diff = diff[diff != 0]
    return diff, rankdata(np.abs(diff))


def _exact_p(w_plus: float, ranks: np.ndarray) -> float:
    # ranks may be midranks (multiples of 1/2); doubling makes them integral
    doubled = np.rint(ranks * 2).astype(np.int64)
    top = int(doubled.sum())
    dist = np.zeros(top + 1, dtype=np.float64)
    dist[0] = 1.0
    for r in doubled:
        shifted = np.zeros_like(dist)
        shifted[r:] = dist[: top + 1 - r]
        dist = dist + shifted
    dist /= dist.sum()
    w = int(round(w_plus * 2))
    lower = dist[: w + 1].sum()
    upper = dist[w:].sum()
    return min(1.0, 2.0 * min(lower, upper))


def _normal_p(w_plus: float, ranks: np.ndarray, edgeworth: bool = True) -> float:
    """Continuity-corrected normal tail, optionally with a kurtosis (Edgeworth) term.

    W+ is a sum of independent r_i * Bernoulli(1/2) terms, so its variance is
    sum(r^2)/4 (the usual tie correction falls out of this) and its excess
    kurtosis is -2 sum(r^4) / sum(r^2)^2. The correction removes most of the
    plain approximation's error at n = 15..20.
    """
    r2 = float(np.sum(ranks**2))
    if r2 <= 0:
        return 1.0
    mean = float(np.sum(ranks)) / 2.0
    z = max(0.0, abs(w_plus - mean) - 0.5) / math.sqrt(r2 / 4.0)
    if edgeworth:
        # first-order Edgeworth term folded into the deviate, so tails stay positive
        kurtosis = -2.0 * float(np.sum(ranks**4)) / r2**2
        z = max(0.0, z - kurtosis / 24.0 * (z**3 - 3.0 * z))
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float], mode: str = "auto") -> float:
    """Two-sided p-value of the paired signed-rank test.

    Zero differences are dropped. ``mode="auto"`` enumerates the exact null
    distribution for up to 20 non-zero differences and otherwise uses the
    tie- and continuity-corrected normal approximation (with an Edgeworth
    kurtosis term; see :func:`_normal_p`).
    """
    if len(a) != len(b):
        raise ValueError("paired samples differ in length")
    diff, ranks = _signed_ranks(a, b)
    if len(diff) == 0:
        return 1.0
    w_plus = float(ranks[diff > 0].sum())
    if mode == "exact" or (mode == "auto" and len(diff) <= EXACT_MAX_N):
        return _exact_p(w_plus, ranks)
    if mode in ("normal", "auto"):
        return _normal_p(w_plus, ranks)
    raise ValueError(f"unknown mode {mode!r}")


def bonferroni(p_values: Sequence[float], m: int | None = None) -> list[float]:
    m = len(p_values) if m is None else m
    return [min(1.0, m * p) for p in p_values]


# -- Cliff's delta ----------------------------------------------------------------------

def effect_class(delta: float) -> str:
    magnitude = abs(delta)
    for bound, name in EFFECT_THRESHOLDS:
        if magnitude < bound:
            return name
    return "L"


def cliffs_delta_naive(a, b) -> float:
    gt = lt = 0
    for x in a:
        for y in b:
            if x > y:
                gt += 1
            elif x < y:
                lt += 1
    return (gt - lt) / (len(a) * len(b))


def cliffs_delta(a, b) -> tuple[float, str]:
    """Cliff's delta of ``a`` over ``b`` and its magnitude class (N/S/M/L)."""
    a = np.asarray(a, dtype=float)
    b = np.sort(np.asarray(b, dtype=float))
    if not len(a) or not len(b):
        raise ValueError("Cliff's delta needs two non-empty samples")
    below = np.searchsorted(b, a, side="left")  # b values strictly smaller than each x
    above = len(b) - np.searchsorted(b, a, side="right")
    delta = (int(below.sum()) - int(above.sum())) / (len(a) * len(b))
    return delta, effect_class(delta)


@dataclass(frozen=True)
class StatResult:
    p_raw: float
    p_adjusted: float
    delta: float
    effect_class: str
    direction: int


def compare_samples(treatment, baseline, m: int = 1) -> StatResult:
    p = wilcoxon_signed_rank(treatment, baseline)
    delta, cls = cliffs_delta(treatment, baseline)
    return StatResult(p, bonferroni([p], m)[0], delta, cls, int(np.sign(delta)))


def stars(p: float) -> str:
    if p < 1e-4:
        return "****"
    if p < 1e-3:
        return "***"
    if p < 1e-2:
        return "**"
    if p < 0.1:
        return "*"
    return "ns"


# -- non-parametric Scott-Knott ESD -----------------------------------------------------

@dataclass(frozen=True)
class ImportanceGroup:
    rank: int
    members: tuple
    medians: tuple


def _pooled(distributions, names):
    return np.concatenate([np.asarray(distributions[n], dtype=float) for n in names])


def split_score(distributions: Mapping[str, Sequence[float]], ordered: Sequence[str], k: int):
    """Between-group spread of medians when ``ordered`` is cut after ``k`` items."""
    everything = _pooled(distributions, ordered)
    grand = np.median(everything)
    score = 0.0
    for side in (ordered[:k], ordered[k:]):
        pooled = _pooled(distributions, side)
        score += len(pooled) * (np.median(pooled) - grand) ** 2
    return float(score)


def best_split(distributions, ordered) -> int:
    scores = [split_score(distributions, ordered, k) for k in range(1, len(ordered))]
    return 1 + int(np.argmax(scores))


def _negligible(distributions, left, right) -> bool:
    delta, _ = cliffs_delta(_pooled(distributions, left), _pooled(distributions, right))
    return abs(delta) < NEGLIGIBLE


def _partition(distributions, ordered) -> list[list[str]]:
    if len(ordered) < 2:
        return [list(ordered)]
    k = best_split(distributions, ordered)
    left, right = ordered[:k], ordered[k:]
    if _negligible(distributions, left, right):
        return [list(ordered)]
    return _partition(distributions, left) + _partition(distributions, right)


def npsk_groups(distributions: Mapping[str, Sequence[float]]) -> list[ImportanceGroup]:
    """Rank features into groups of statistically distinct importance.

    Features are ordered by descending median, recursively cut where the
    between-group spread of medians is largest (a cut is kept only if the
    two sides differ non-negligibly), and finally adjacent groups with a
    negligible Cliff's delta are merged.
    """
    if not distributions:
        return []
    counts = {len(v) for v in distributions.values()}
    if len(counts) != 1:
        raise ValueError("every feature needs the same number of importance samples")
    medians = {n: float(np.median(np.asarray(v, dtype=float))) for n, v in distributions.items()}
    ordered = sorted(distributions, key=lambda n: (-medians[n], n))
    groups = _partition(distributions, ordered)
    merged = True
    while merged and len(groups) > 1:
        merged = False
        for i in range(len(groups) - 1):
            if _negligible(distributions, groups[i], groups[i + 1]):
                groups[i:i + 2] = [groups[i] + groups[i + 1]]
                merged = True
                break
    return [ImportanceGroup(rank, tuple(g), tuple(medians[n] for n in g))
            for rank, g in enumerate(groups, start=1)]
