"""Random forest (Gini, mean-decrease-impurity importance) and least-squares baselines."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np

log = logging.getLogger(__name__)

MODEL_VERSION = 1
RIDGE = 1e-8


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_features: str = "sqrt"
    min_leaf: int = 1
    max_depth: Optional[int] = None

    def n_candidates(self, n_features: int) -> int:
        if self.max_features == "sqrt":
            return max(1, math.ceil(math.sqrt(n_features)))
        if self.max_features == "all":
            return n_features
        return max(1, min(n_features, int(self.max_features)))


# -- compiled kernels ---------------------------------------------------------------------

@numba.njit(cache=True)
def _gini(c0, c1):
    n = c0 + c1
    if n == 0:
        return 0.0
    p = c1 / n
    return 2.0 * p * (1.0 - p)


@numba.njit(cache=True)
def _grow(X, y, sample, global_order, mtry, max_depth, min_leaf, seed):
    np.random.seed(seed)
    n_features = X.shape[1]
    total = sample.shape[0]
    cap = 2 * total + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    counts = np.zeros((cap, 2))
    gain = np.zeros(cap)

    # per feature, positions into ``sample`` sorted by value; every node owns the
    # same [start, end) slice of each row. Built from the forest-wide column
    # order by bucketing bootstrap positions per source row.
    n_rows = X.shape[0]
    offsets = np.zeros(n_rows + 1, np.int64)
    for i in range(total):
        offsets[sample[i] + 1] += 1
    for r in range(n_rows):
        offsets[r + 1] += offsets[r]
    fill = offsets[:-1].copy()
    by_row = np.empty(total, np.int64)
    for i in range(total):
        by_row[fill[sample[i]]] = i
        fill[sample[i]] += 1
    ordered = np.empty((n_features, total), np.int64)
    for f in range(n_features):
        k = 0
        for r in global_order[f]:
            for j in range(offsets[r], offsets[r + 1]):
                ordered[f, k] = by_row[j]
                k += 1
    goes_left = np.zeros(total, np.bool_)
    buffer = np.empty(total, np.int64)

    # stack rows: node id, start, end, depth, negatives, positives
    stack = np.zeros((cap, 6), np.int64)
    stack[0, 2] = total
    for i in range(total):
        stack[0, 5] += int(y[sample[i]])
    stack[0, 4] = total - stack[0, 5]
    top = 1
    n_nodes = 1
    order = np.arange(n_features)

    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        n = end - start
        c0 = float(stack[top, 4])
        c1 = float(stack[top, 5])
        counts[node, 0] = c0
        counts[node, 1] = c1
        if c0 == 0 or c1 == 0 or n < 2 * min_leaf or (max_depth >= 0 and depth >= max_depth):
            continue
        parent = _gini(c0, c1)

        # random feature order; the first mtry are the candidates
        for i in range(n_features):
            order[i] = i
        for i in range(n_features - 1):
            j = i + np.random.randint(0, n_features - i)
            tmp = order[i]
            order[i] = order[j]
            order[j] = tmp

        best_gain = -1.0
        best_feature = -1
        best_threshold = 0.0
        best_left1 = 0.0
        best_nl = 0
        considered = 0
        while considered < n_features and (considered < mtry or best_feature < 0):
            take = mtry if considered == 0 else 1
            if considered + take > n_features:
                take = n_features - considered
            # shuffled order doubles as the tie-break, so equally good features
            # (e.g. duplicated columns) win equally often
            candidates = order[considered:considered + take]
            considered += take
            for f in candidates:
                row = ordered[f]
                left1 = 0.0
                for k in range(start, end - 1):
                    left1 += y[sample[row[k]]]
                    v = X[sample[row[k]], f]
                    w = X[sample[row[k + 1]], f]
                    if v == w:
                        continue
                    nl = k + 1 - start
                    nr = n - nl
                    if nl < min_leaf or nr < min_leaf:
                        continue
                    left0 = nl - left1
                    right1 = c1 - left1
                    right0 = nr - right1
                    # n-weighted child gini: nl * 2 p (1 - p) == 2 * left0 * left1 / nl
                    child = 2.0 * (left0 * left1 / nl + right0 * right1 / nr) / n
                    dec = parent - child
                    thr = 0.5 * (v + w)
                    if thr >= w:
                        thr = v
                    if dec > best_gain:
                        best_gain = dec
                        best_feature = f
                        best_threshold = thr
                        best_left1 = left1
                        best_nl = nl
        if best_feature < 0:
            continue

        mid = start + best_nl
        l1 = int(best_left1)
        l0 = best_nl - l1
        r1 = int(c1) - l1
        r0 = (n - best_nl) - r1
        # stable partition of every feature row around the chosen split; not
        # needed when neither child can be split again
        left_open = l0 > 0 and l1 > 0 and best_nl >= 2 * min_leaf
        right_open = r0 > 0 and r1 > 0 and n - best_nl >= 2 * min_leaf
        if max_depth >= 0 and depth + 1 >= max_depth:
            left_open = right_open = False
        for i in range(start, end):
            pos = ordered[best_feature, i]
            goes_left[pos] = i < mid
        for f in range(n_features):
            if not (left_open or right_open):
                break
            row = ordered[f]
            lo = start
            hi = 0
            for i in range(start, end):
                pos = row[i]
                if goes_left[pos]:
                    row[lo] = pos
                    lo += 1
                else:
                    buffer[hi] = pos
                    hi += 1
            for i in range(hi):
                row[mid + i] = buffer[i]
        feature[node] = best_feature
        threshold[node] = best_threshold
        gain[node] = (n / total) * best_gain
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack[top, 0] = n_nodes + 1
        stack[top, 1] = mid
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        stack[top, 4] = r0
        stack[top, 5] = r1
        top += 1
        stack[top, 0] = n_nodes
        stack[top, 1] = start
        stack[top, 2] = mid
        stack[top, 3] = depth + 1
        stack[top, 4] = l0
        stack[top, 5] = l1
        top += 1
        n_nodes += 2
    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes],
            counts[:n_nodes], gain[:n_nodes])


@numba.njit(cache=True)
def _apply(feature, threshold, left, right, X):
    out = np.empty(X.shape[0], np.int64)
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = node
    return out


# -- forest -------------------------------------------------------------------------------

@dataclass
class DecisionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # per node (negatives, positives) of the bootstrap sample
    gain: np.ndarray  # weighted impurity decrease of each split node

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def positive_fraction(self) -> np.ndarray:
        totals = self.counts.sum(axis=1)
        return self.counts[:, 1] / np.where(totals > 0, totals, 1.0)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        leaves = _apply(self.feature, self.threshold, self.left, self.right,
                        np.ascontiguousarray(X, dtype=float))
        return self.positive_fraction()[leaves]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
            "gain": self.gain.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DecisionTree":
        return cls(
            np.array(data["feature"], dtype=np.int64),
            np.array(data["threshold"], dtype=float),
            np.array(data["left"], dtype=np.int64),
            np.array(data["right"], dtype=np.int64),
            np.array(data["counts"], dtype=float).reshape(-1, 2),
            np.array(data["gain"], dtype=float),
        )


@dataclass
class ForestModel:
    trees: list
    params: ForestParams
    feature_names: list
    seed: int = 0
    constant: Optional[float] = None  # set when trained on a single class

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != len(self.feature_names):
            raise SchemaError(f"expected {len(self.feature_names)} features, got {X.shape[1]}")
        if self.constant is not None:
            return np.full(X.shape[0], self.constant)
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.predict_proba(X)
        return total / len(self.trees)

    def to_json(self) -> str:
        return json.dumps({
            "version": MODEL_VERSION,
            "kind": "random_forest",
            "params": {"n_trees": self.params.n_trees, "max_features": self.params.max_features,
                       "min_leaf": self.params.min_leaf, "max_depth": self.params.max_depth},
            "seed": self.seed,
            "constant": self.constant,
            "feature_names": list(self.feature_names),
            "trees": [tree.to_dict() for tree in self.trees],
        })

    @classmethod
    def from_json(cls, text: str) -> "ForestModel":
        data = json.loads(text)
        if data.get("version") != MODEL_VERSION:
            raise SchemaError(f"unsupported model version {data.get('version')!r}")
        return cls(
            trees=[DecisionTree.from_dict(t) for t in data["trees"]],
            params=ForestParams(**data["params"]),
            feature_names=list(data["feature_names"]),
            seed=data["seed"],
            constant=data["constant"],
        )


def fit_forest(X, y, params: Optional[ForestParams] = None, seed: int = 0,
               feature_names=None) -> ForestModel:
    """Grow a forest on a feature matrix whose row order is already canonical."""
    params = params or ForestParams()
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    n, d = X.shape
    names = list(feature_names) if feature_names is not None else [f"x{j}" for j in range(d)]
    if n == 0:
        raise ValueError("cannot train on an empty dataset")
    classes = np.unique(y)
    if len(classes) == 1:
        log.warning("training data holds a single class; fitting a constant model")
        return ForestModel([], params, names, seed, constant=float(classes[0]))
    mtry = params.n_candidates(d)
    max_depth = -1 if params.max_depth is None else params.max_depth
    yf = y.astype(float)
    global_order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T)
    trees = []
    for t in range(params.n_trees):
        rng = np.random.default_rng([seed, t])
        sample = rng.integers(0, n, size=n)
        grow_seed = int(rng.integers(0, 2**31 - 1))
        trees.append(DecisionTree(*_grow(X, yf, sample, global_order, mtry, max_depth,
                                         params.min_leaf, grow_seed)))
    return ForestModel(trees, params, names, seed)


def train_forest(train, params: Optional[ForestParams] = None, seed: int = 0) -> ForestModel:
    """Train on a :class:`~jitdp.dataset.Dataset` (rows taken in commit-hash order)."""
    order = sorted(range(len(train.hashes)), key=lambda i: train.hashes[i])
    return fit_forest(train.X[order], train.y[order], params, seed, train.feature_names)


def _matrix_for(model_names, data) -> np.ndarray:
    if isinstance(data, dict):
        unknown = set(data) - set(model_names)
        missing = set(model_names) - set(data)
        if unknown or missing:
            raise SchemaError(f"feature mismatch: unknown {sorted(unknown)}, "
                              f"missing {sorted(missing)}")
        return np.array([[float(data[n]) for n in model_names]])
    names = list(data.feature_names)
    if set(names) != set(model_names):
        raise SchemaError(f"feature mismatch: unknown {sorted(set(names) - set(model_names))}, "
                          f"missing {sorted(set(model_names) - set(names))}")
    return data.X[:, [names.index(n) for n in model_names]]


def predict_proba(model, data) -> np.ndarray:
    """Scores for a ``{feature: value}`` row or a dataset, matched by feature name."""
    return model.predict_proba(_matrix_for(model.feature_names, data))


def classify(model, data, threshold: float = 0.5) -> np.ndarray:
    return predict_proba(model, data) > threshold


def feature_importance(model: ForestModel) -> dict[str, float]:
    """Mean decrease in impurity per feature, normalized to sum to one."""
    d = len(model.feature_names)
    totals = np.zeros(d)
    for tree in model.trees:
        split = tree.feature >= 0
        np.add.at(totals, tree.feature[split], tree.gain[split])
    if model.trees:
        totals /= len(model.trees)
    s = totals.sum()
    values = totals / s if s > 0 else np.full(d, 1.0 / d)
    return dict(zip(model.feature_names, values.tolist()))


# -- linear baseline ----------------------------------------------------------------------

@dataclass
class LinearModel:
    weights: np.ndarray
    intercept: float
    target: str
    feature_names: list = field(default_factory=list)

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.weights + self.intercept


def fit_linear(X, y) -> tuple[np.ndarray, float]:
    """Least squares via damped normal equations on centered data."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] < 2:
        raise ValueError("linear regression needs at least two rows")
    mx, my = X.mean(axis=0), y.mean()
    Xc, yc = X - mx, y - my
    gram = Xc.T @ Xc + RIDGE * np.eye(X.shape[1])
    try:
        w = np.linalg.solve(gram, Xc.T @ yc)
    except np.linalg.LinAlgError:
        w = np.linalg.lstsq(gram, Xc.T @ yc, rcond=None)[0]
    return w, float(my - mx @ w)


def train_linear(train, target: str = "class") -> LinearModel:
    """OLS on the class label or on effort-normalized defect density (EALR)."""
    if target == "class":
        y = train.y.astype(float)
    elif target == "density":
        y = train.y / (train.churn + 1.0)
    else:
        raise ValueError(f"unknown target {target!r}")
    w, b = fit_linear(train.X, y)
    return LinearModel(w, b, target, list(train.feature_names))
