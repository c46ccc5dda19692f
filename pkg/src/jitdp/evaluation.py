"""Classification and effort-aware metrics plus the effort-aware ranking strategies."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

BUDGET = 0.20
THRESHOLD = 0.5


@dataclass(frozen=True)
class RankEntry:
    hash: str
    score: float
    effort: float  # LA + LD in raw lines
    is_defective: bool


@dataclass
class MetricsReport:
    precision: float
    recall: float
    f1: float
    mcc: float
    r_at_20: float = 0.0
    f1_at_20: float = 0.0
    pci_at_20: float = 0.0
    ifa: int = 0

    def as_dict(self) -> dict:
        return {
            "precision": self.precision, "recall": self.recall, "f1": self.f1, "mcc": self.mcc,
            "r_at_20": self.r_at_20, "f1_at_20": self.f1_at_20, "pci_at_20": self.pci_at_20,
            "ifa": self.ifa,
        }


METRIC_NAMES = list(MetricsReport(0, 0, 0, 0).as_dict())


def _ratio(num, den) -> float:
    return num / den if den else 0.0


def _harmonic(a: float, b: float) -> float:
    return 2 * a * b / (a + b) if a + b else 0.0


def confusion_metrics(predictions: Sequence[bool], labels: Sequence[bool]) -> dict:
    """Precision, recall, F1 and MCC; a zero denominator yields 0."""
    pred = np.asarray(predictions, dtype=bool)
    true = np.asarray(labels, dtype=bool)
    if pred.shape != true.shape:
        raise ValueError(f"length mismatch: {pred.shape[0]} predictions, {true.shape[0]} labels")
    if pred.size == 0:
        raise ValueError("no predictions to score")
    tp = int(np.sum(pred & true))
    fp = int(np.sum(pred & ~true))
    fn = int(np.sum(~pred & true))
    tn = int(np.sum(~pred & ~true))
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = (tp * tn - fp * fn) / math.sqrt(denom) if denom else 0.0
    return {"precision": precision, "recall": recall, "f1": _harmonic(precision, recall),
            "mcc": mcc}


def _entries(hashes, scores, efforts, defective):
    return [RankEntry(h, float(s), float(e), bool(d))
            for h, s, e, d in zip(hashes, scores, efforts, defective)]


def rank_cbs_plus(hashes, scores, efforts, defective, threshold: float = THRESHOLD):
    """Classify-before-sort: predicted-defective first, each part by score / (effort + 1)."""
    entries = _entries(hashes, scores, efforts, defective)

    def key(e):
        return (-(e.score / (e.effort + 1.0)), e.hash)

    prone = sorted((e for e in entries if e.score > threshold), key=key)
    clean = sorted((e for e in entries if e.score <= threshold), key=key)
    return prone + clean


def rank_by_score(hashes, scores, efforts, defective):
    """Descending score (e.g. predicted defect density), ties by hash."""
    entries = _entries(hashes, scores, efforts, defective)
    return sorted(entries, key=lambda e: (-e.score, e.hash))


def rank_unsupervised(hashes, lines_before, efforts, defective, strategy: str):
    """LT: smallest files first; CHURN: smallest changes first."""
    if strategy == "lt":
        keys = lines_before
    elif strategy == "churn":
        keys = efforts
    else:
        raise ValueError(f"unknown unsupervised strategy {strategy!r}")
    entries = _entries(hashes, keys, efforts, defective)
    return sorted(entries, key=lambda e: (e.score, e.hash))


def effort_metrics(ranking: Sequence[RankEntry], budget: float = BUDGET) -> dict:
    """R@budget, F1@budget, PCI@budget and IFA of an inspection order.

    Commits are inspected in ranking order while the cumulative effort stays
    within ``budget`` of the total; the first commit that does not fully fit
    ends the inspection.
    """
    total = sum(e.effort for e in ranking)
    n_defects = sum(e.is_defective for e in ranking)
    limit = budget * total
    inspected = found = 0
    spent = 0.0
    for entry in ranking:
        if spent + entry.effort > limit:
            break
        spent += entry.effort
        inspected += 1
        found += entry.is_defective
    ifa = len(ranking)
    for i, entry in enumerate(ranking):
        if entry.is_defective:
            ifa = i
            break
    # F1 of recall found/defects and precision found/inspected, from the counts
    return {
        "r_at_20": _ratio(found, n_defects),
        "f1_at_20": _ratio(2 * found, n_defects + inspected) if found else 0.0,
        "pci_at_20": _ratio(inspected, len(ranking)),
        "ifa": ifa,
    }
