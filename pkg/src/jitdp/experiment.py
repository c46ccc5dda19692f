"""Fold-level experiment pipeline: preprocess, train, score and rank."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from jitdp.dataset import (Dataset, binary_columns, downsample, log_transform, split_cv,
                           split_time, standardize)
from jitdp.evaluation import (BUDGET, MetricsReport, confusion_metrics, effort_metrics,
                              rank_by_score, rank_cbs_plus, rank_unsupervised)
from jitdp.features import FEATURE_SETS
from jitdp.learner import ForestParams, feature_importance, predict_proba, train_forest, train_linear

log = logging.getLogger(__name__)

MODELS = ("rf", "cbs+", "ealr", "lt", "churn")
SCHEMES = ("cv", "short-term", "long-term")


def fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


@dataclass(frozen=True)
class FoldResult:
    fold: int
    metrics: dict


def plan_folds(ds: Dataset, scheme: str, seed: int, *, k: int = 10, times: int = 10,
               censor: bool = False, frame_months: int = 6):
    if scheme == "cv":
        return split_cv(ds, k=k, times=times, seed=seed)
    if scheme in ("short-term", "long-term"):
        return split_time(ds, frame_months=frame_months, mode=scheme, censor=censor)
    raise ValueError(f"unknown scheme {scheme!r}")


def preprocess(train: Dataset, test: Dataset, seed: int, scale_on: str = "train",
               balance: bool = True):
    """Log transform, standardize, then balance the training side."""
    skip = binary_columns(train)
    train = log_transform(train, skip)
    test = log_transform(test, skip)
    train, test, _ = standardize(train, test, scale_on)
    if balance:
        train = downsample(train, seed)
    return train, test


def _unsupervised_predictions(ranking, budget):
    # commits inside the inspection budget count as predicted defective
    total = sum(e.effort for e in ranking)
    chosen, spent = set(), 0.0
    for entry in ranking:
        if spent + entry.effort > budget * total:
            break
        spent += entry.effort
        chosen.add(entry.hash)
    return chosen


def evaluate_fold(ds: Dataset, fold: int, train_rows, test_rows, *, model: str = "rf",
                  seed: int = 0, budget: float = BUDGET, scale_on: str = "train",
                  params: Optional[ForestParams] = None) -> FoldResult:
    train, test = ds.subset(train_rows), ds.subset(test_rows)
    labels = test.y.astype(bool)
    if model in ("lt", "churn"):
        keys = test.lines_before if model == "lt" else test.churn
        ranking = rank_unsupervised(test.hashes, keys, test.churn, labels, model)
        chosen = _unsupervised_predictions(ranking, budget)
        predicted = np.array([h in chosen for h in test.hashes])
    else:
        s = fold_seed(seed, fold)
        train, test = preprocess(train, test, s, scale_on)
        if model in ("rf", "cbs+"):
            forest = train_forest(train, params, seed=s)
            scores = predict_proba(forest, test)
            predicted = scores > 0.5
            rank = rank_cbs_plus if model == "cbs+" else rank_by_score
            ranking = rank(test.hashes, scores, test.churn, labels)
        elif model == "ealr":
            predicted = train_linear(train, "class").predict(test.X) > 0.5
            density = train_linear(train, "density").predict(test.X)
            ranking = rank_by_score(test.hashes, density, test.churn, labels)
        else:
            raise ValueError(f"unknown model {model!r}")
    metrics = MetricsReport(**confusion_metrics(predicted, labels),
                            **effort_metrics(ranking, budget))
    return FoldResult(fold, metrics.as_dict())


def _run_fold(job):
    ds, fold, train_rows, test_rows, kwargs = job
    return evaluate_fold(ds, fold, train_rows, test_rows, **kwargs)


def run_evaluation(ds: Dataset, *, feature_set: str = "all", scheme: str = "cv",
                   model: str = "rf", seed: int = 0, budget: float = BUDGET,
                   scale_on: str = "train", censor: bool = False, jobs: int = 1,
                   k: int = 10, times: int = 10,
                   params: Optional[ForestParams] = None) -> list[FoldResult]:
    """Per-fold metrics for one feature set, ordered by fold id."""
    if feature_set not in FEATURE_SETS:
        raise ValueError(f"unknown feature set {feature_set!r}")
    data = ds.select(FEATURE_SETS[feature_set]) if model not in ("lt", "churn") else ds
    plan = plan_folds(ds, scheme, seed, k=k, times=times, censor=censor)
    kwargs = dict(model=model, seed=seed, budget=budget, scale_on=scale_on, params=params)
    jobs_list = [(data, i, tr, te, kwargs) for i, (tr, te) in enumerate(plan.folds)]
    if jobs > 1 and len(jobs_list) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_fold, jobs_list))
    else:
        results = [_run_fold(j) for j in jobs_list]
    return sorted(results, key=lambda r: r.fold)


def _importance_fold(job):
    ds, fold, train_rows, seed, params = job
    s = fold_seed(seed, fold)
    train, _ = preprocess(ds.subset(train_rows), ds.subset(train_rows[:0]), s)
    return feature_importance(train_forest(train, params, seed=s))


def importance_distributions(ds: Dataset, *, seed: int = 0, k: int = 10, times: int = 10,
                             jobs: int = 1, params: Optional[ForestParams] = None) -> dict:
    """MDI importance of every feature on each CV training fold."""
    plan = split_cv(ds, k=k, times=times, seed=seed)
    work = [(ds, i, tr, seed, params) for i, (tr, _) in enumerate(plan.folds)]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_fold = list(pool.map(_importance_fold, work))
    else:
        per_fold = [_importance_fold(w) for w in work]
    return {name: [imp[name] for imp in per_fold] for name in ds.feature_names}


def summarize(results: list[FoldResult]) -> dict:
    """Mean and population standard deviation of each metric across folds."""
    names = list(results[0].metrics) if results else []
    out = {}
    for name in names:
        values = np.array([r.metrics[name] for r in results], dtype=float)
        out[name] = (float(values.mean()), float(values.std()))
    return out
