"""Slow, obviously-correct reference implementations used as test oracles."""

import math
from fractions import Fraction
from itertools import product


def confusion_oracle(pred, labels):
    tp = sum(1 for p, t in zip(pred, labels) if p and t)
    fp = sum(1 for p, t in zip(pred, labels) if p and not t)
    fn = sum(1 for p, t in zip(pred, labels) if not p and t)
    tn = sum(1 for p, t in zip(pred, labels) if not p and not t)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    den = math.sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    mcc = (tp * tn - fp * fn) / den if den else 0.0
    return {"precision": precision, "recall": recall, "f1": f1, "mcc": mcc}


def effort_oracle(ranking, budget=Fraction(1, 5)):
    """Try every prefix; keep the longest whose effort fits inside the budget."""
    total = sum(Fraction(e.effort) for e in ranking)
    limit = Fraction(budget) * total
    best = 0
    for k in range(len(ranking) + 1):
        if sum(Fraction(e.effort) for e in ranking[:k]) <= limit:
            best = k
        else:
            break
    inspected = ranking[:best]
    found = sum(e.is_defective for e in inspected)
    defects = sum(e.is_defective for e in ranking)
    recall = Fraction(found, defects) if defects else Fraction(0)
    precision = Fraction(found, best) if best else Fraction(0)
    f1 = 2 * recall * precision / (recall + precision) if best and recall + precision else 0
    ifa = next((i for i, e in enumerate(ranking) if e.is_defective), len(ranking))
    return {"r_at_20": float(recall), "f1_at_20": float(f1),
            "pci_at_20": float(Fraction(best, len(ranking))) if ranking else 0.0, "ifa": ifa}


def cliffs_oracle(a, b):
    more = sum(1 for x in a for y in b if x > y)
    less = sum(1 for x in a for y in b if x < y)
    return (more - less) / (len(a) * len(b))


def wilcoxon_exact_oracle(diffs):
    """Two-sided p by enumerating all 2^n sign patterns over midranks."""
    d = [x for x in diffs if x != 0]
    if not d:
        return 1.0
    mags = sorted(abs(x) for x in d)
    ranks = {}
    for v in set(mags):
        idx = [i + 1 for i, m in enumerate(mags) if m == v]
        ranks[v] = sum(idx) / len(idx)
    r = [ranks[abs(x)] for x in d]
    total = sum(r)
    w_plus = sum(ri for ri, x in zip(r, d) if x > 0)
    observed = min(w_plus, total - w_plus)
    hits = 0
    for signs in product((0, 1), repeat=len(r)):
        w = sum(ri for ri, s in zip(r, signs) if s)
        if min(w, total - w) <= observed + 1e-9:
            hits += 1
    return min(1.0, hits / 2 ** len(r))
