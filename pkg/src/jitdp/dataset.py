"""Feature datasets: CSV persistence, preprocessing and train/test split plans."""

from __future__ import annotations

import calendar
import csv
import json
import logging
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Iterable, Optional

import numpy as np

from jitdp.features import FEATURE_NAMES, FLOAT_FEATURES, FeatureVector

log = logging.getLogger(__name__)


class SplitError(ValueError):
    """A split scheme cannot be applied to the dataset."""


@dataclass
class Dataset:
    """Labeled feature matrix.

    ``churn`` (LA + LD) and ``lines_before`` (LT) hold the raw values so that
    effort-aware ranking still works after the feature columns have been
    transformed.
    """

    hashes: list
    timestamps: np.ndarray
    X: np.ndarray
    y: np.ndarray
    feature_names: list
    churn: np.ndarray
    lines_before: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.hashes)) != len(self.hashes):
            raise ValueError("duplicate commit hashes in dataset")
        if self.X.shape != (len(self.hashes), len(self.feature_names)):
            raise ValueError("feature matrix shape does not match hashes/feature names")

    def __len__(self) -> int:
        return len(self.hashes)

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return replace(
            self,
            hashes=[self.hashes[i] for i in rows],
            timestamps=self.timestamps[rows],
            X=self.X[rows],
            y=self.y[rows],
            churn=self.churn[rows],
            lines_before=self.lines_before[rows],
            provenance=dict(self.provenance),
        )

    def select(self, names: Iterable[str]) -> "Dataset":
        names = list(names)
        cols = [self.feature_names.index(n) for n in names]
        return replace(self, X=self.X[:, cols], feature_names=names,
                       provenance=dict(self.provenance))

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.feature_names.index(name)]

    def with_flag(self, flag: str, value=True) -> "Dataset":
        provenance = dict(self.provenance)
        provenance.setdefault("applied", [])
        provenance["applied"] = list(provenance["applied"]) + [flag]
        provenance[flag] = value
        return replace(self, provenance=provenance)

    @classmethod
    def from_vectors(cls, vectors: list[FeatureVector], source: str = "<memory>") -> "Dataset":
        vectors = [v for v in vectors if v.label is not None]
        X = np.array([[float(v.features[n]) for n in FEATURE_NAMES] for v in vectors],
                     dtype=float).reshape(len(vectors), len(FEATURE_NAMES))
        return cls._build([v.commit_hash for v in vectors], [v.timestamp for v in vectors], X,
                          [v.label for v in vectors], list(FEATURE_NAMES), source)

    @classmethod
    def _build(cls, hashes, timestamps, X, labels, names, source):
        def raw(name):
            return X[:, names.index(name)].copy() if name in names else np.zeros(len(hashes))

        churn = raw("LA") + raw("LD")
        return cls(list(hashes), np.asarray(timestamps, dtype=np.int64), X,
                   np.asarray(labels, dtype=int), list(names), churn, raw("LT"),
                   {"source": source, "applied": []})


# -- CSV -------------------------------------------------------------------------------

def format_value(name: str, value) -> str:
    if name in FLOAT_FEATURES or isinstance(value, float):
        return format(float(value), ".6g")
    return str(int(value))


def write_csv(vectors: Iterable[FeatureVector], fp) -> None:
    """Dataset CSV: ``commit_hash,timestamp,<51 features>,label``."""
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(["commit_hash", "timestamp", *FEATURE_NAMES, "label"])
    for v in vectors:
        label = "" if v.label is None else str(int(v.label))
        writer.writerow([v.commit_hash, str(int(v.timestamp)),
                         *(format_value(n, v.features[n]) for n in FEATURE_NAMES), label])


def read_vectors(fp) -> list[FeatureVector]:
    reader = csv.reader(fp)
    header = next(reader)
    if header[:2] != ["commit_hash", "timestamp"] or header[-1] != "label":
        raise ValueError("not a dataset CSV: unexpected header")
    names = header[2:-1]
    vectors = []
    for row in reader:
        if not row:
            continue
        features = {}
        for name, text in zip(names, row[2:-1]):
            features[name] = float(text) if name in FLOAT_FEATURES else int(float(text))
        label = int(row[-1]) if row[-1] != "" else None
        vectors.append(FeatureVector(row[0], int(row[1]), features, label))
    return vectors


def read_csv(path) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        vectors = read_vectors(fh)
    return Dataset.from_vectors(vectors, source=str(path))


# -- preprocessing ------------------------------------------------------------------------

def binary_columns(ds: Dataset) -> list[str]:
    return [n for j, n in enumerate(ds.feature_names) if np.isin(ds.X[:, j], (0.0, 1.0)).all()]


def signed_log1p(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.log1p(np.abs(x))


def log_transform(ds: Dataset, skip: Optional[Iterable[str]] = None) -> Dataset:
    """ln(1 + x) on every non-binary column; negative values keep their sign.

    ``skip`` names columns treated as binary; by default they are detected
    from ``ds`` itself.
    """
    skip = set(binary_columns(ds) if skip is None else skip)
    X = ds.X.copy()
    for j, name in enumerate(ds.feature_names):
        if name not in skip:
            X[:, j] = signed_log1p(X[:, j])
    return replace(ds, X=X).with_flag("log_transform", sorted(skip))


@dataclass(frozen=True)
class ScaleParams:
    mean: np.ndarray
    std: np.ndarray
    fit_on: str


def standardize(train: Dataset, test: Dataset, scale_on: str = "train"):
    """Center and scale to unit (population) variance.

    Parameters are fit on ``train`` unless ``scale_on="test"``. Zero-variance
    columns are only centered.
    """
    if not len(train):
        raise ValueError("cannot standardize an empty training set")
    if scale_on not in ("train", "test"):
        raise ValueError(f"scale_on must be 'train' or 'test', not {scale_on!r}")
    basis = train.X if scale_on == "train" or not len(test) else test.X
    mean = basis.mean(axis=0)
    std = basis.std(axis=0)
    # float noise on a constant column must not be blown up to unit variance
    tiny = 1e-12 * np.maximum(1.0, np.abs(mean))
    std = np.where(std > tiny, std, 1.0)
    params = ScaleParams(mean, std, scale_on)

    def apply(ds):
        X = (ds.X - mean) / std
        return replace(ds, X=X).with_flag("standardize", scale_on)

    return apply(train), apply(test), params


def downsample(train: Dataset, seed: int) -> Dataset:
    """Randomly drop majority-class rows until both classes are equally large."""
    pos = np.flatnonzero(train.y == 1)
    neg = np.flatnonzero(train.y == 0)
    if not len(pos) or not len(neg):
        log.warning("downsample: only one class present; training set left unchanged")
        return train.with_flag("downsample", "skipped")
    minority, majority = (pos, neg) if len(pos) <= len(neg) else (neg, pos)
    rng = np.random.default_rng(seed)
    kept_majority = rng.choice(majority, size=len(minority), replace=False)
    rows = np.concatenate([minority, kept_majority])
    rows = sorted(rows, key=lambda i: train.hashes[i])
    return train.subset(rows).with_flag("downsample", seed)


# -- split plans -----------------------------------------------------------------------------

@dataclass
class SplitPlan:
    scheme: str
    folds: list  # [(train_rows, test_rows)]
    seed: Optional[int] = None

    def to_json(self, ds: Dataset) -> str:
        return json.dumps({
            "scheme": self.scheme,
            "seed": self.seed,
            "folds": [
                {"fold": i,
                 "train": [ds.hashes[r] for r in train],
                 "test": [ds.hashes[r] for r in test]}
                for i, (train, test) in enumerate(self.folds)
            ],
        }, indent=1)


def _canonical_order(ds: Dataset) -> np.ndarray:
    return np.array(sorted(range(len(ds)), key=lambda i: ds.hashes[i]), dtype=int)


def split_cv(ds: Dataset, k: int = 10, times: int = 10, seed: int = 0) -> SplitPlan:
    """Repeated stratified k-fold cross validation (``times * k`` folds)."""
    order = _canonical_order(ds)
    classes = {}
    for label in (0, 1):
        classes[label] = order[ds.y[order] == label]
    small = {label: len(rows) for label, rows in classes.items() if len(rows) < k}
    if small:
        raise SplitError(f"each class needs at least {k} rows for {k}-fold CV; counts: "
                         f"clean={len(classes[0])}, defective={len(classes[1])}")
    rng = np.random.default_rng(seed)
    folds = []
    for _ in range(times):
        buckets = [[] for _ in range(k)]
        slot = 0
        for label in (1, 0):
            rows = rng.permutation(classes[label])
            for row in rows:
                buckets[slot % k].append(int(row))
                slot += 1
        everything = set(range(len(ds)))
        for bucket in buckets:
            test = sorted(bucket)
            train = sorted(everything - set(bucket))
            folds.append((np.array(train, dtype=int), np.array(test, dtype=int)))
    return SplitPlan("cv", folds, seed)


def add_months(timestamp: int, months: int) -> int:
    moment = datetime.fromtimestamp(int(timestamp), tz=timezone.utc)
    index = moment.year * 12 + moment.month - 1 + months
    year, month = divmod(index, 12)
    day = min(moment.day, calendar.monthrange(year, month + 1)[1])
    return int(moment.replace(year=year, month=month + 1, day=day).timestamp())


def censor_recent(ds: Dataset, months: int = 6) -> Dataset:
    """Drop the final ``months`` of the stream (labels there are incomplete)."""
    if not len(ds):
        return ds
    cutoff = add_months(int(ds.timestamps.max()), -months)
    return ds.subset(np.flatnonzero(ds.timestamps < cutoff)).with_flag("censor", months)


def time_frames(ds: Dataset, frame_months: int = 6) -> list[np.ndarray]:
    """Rows per half-open frame anchored at the earliest timestamp."""
    if not len(ds):
        return []
    start = int(ds.timestamps.min())
    last = int(ds.timestamps.max())
    frames = []
    lo = start
    i = 0
    while lo <= last:
        hi = add_months(start, frame_months * (i + 1))
        rows = np.flatnonzero((ds.timestamps >= lo) & (ds.timestamps < hi))
        frames.append(rows)
        lo = hi
        i += 1
    return frames


def split_time(ds: Dataset, frame_months: int = 6, mode: str = "short-term",
               censor: bool = False) -> SplitPlan:
    """Short-term (frame n -> frame n+1) or long-term (history -> last frame) splits."""
    if censor:
        keep = np.flatnonzero(ds.timestamps < add_months(int(ds.timestamps.max()), -frame_months))
    else:
        keep = np.arange(len(ds))
    stamps = ds.timestamps
    folds = []
    if mode == "short-term":
        sub = ds.subset(keep)
        frames = [keep[rows] for rows in time_frames(sub, frame_months)]
        if len(frames) < 2:
            raise SplitError(f"short-term validation needs at least two {frame_months}-month "
                             f"frames; the data spans {len(frames)}")
        for i in range(len(frames) - 1):
            train, test = frames[i], frames[i + 1]
            if not len(train) or not len(test):
                log.warning("skipping frame pair %d/%d: empty side", i, i + 1)
                continue
            folds.append((np.sort(train), np.sort(test)))
    elif mode == "long-term":
        if not len(keep):
            raise SplitError("long-term validation on an empty dataset")
        cutoff = add_months(int(stamps[keep].max()), -frame_months)
        train = keep[stamps[keep] < cutoff]
        test = keep[stamps[keep] >= cutoff]
        if not len(train) or not len(test):
            raise SplitError("long-term validation needs rows before and inside the last frame")
        folds.append((np.sort(train), np.sort(test)))
    else:
        raise ValueError(f"unknown time split mode {mode!r}")
    return SplitPlan(mode, folds, None)
