"""Seeded synthetic datasets with known signal, for checks and demos."""

from __future__ import annotations

import numpy as np
from scipy.stats import norm

from jitdp.dataset import Dataset
from jitdp.features import FEATURE_NAMES, FLOAT_FEATURES

_EPOCH = 1_500_000_000


def _hashes(rng, n):
    return [f"{v:040x}" for v in rng.integers(0, 2**62, size=n, dtype=np.int64)]


def informative_dataset(n: int = 500, d: int = 10, informative: int = 2, seed: int = 0,
                        mirror: bool = True) -> Dataset:
    """Gaussian features; a commit is defective iff every informative feature is high.

    The cut-off puts half the rows in each class. With ``mirror`` the rows
    come in groups that cyclically rotate the informative columns, so those
    features are exactly exchangeable within the sample and none of them is
    more important than another by accident of the draw.
    """
    rng = np.random.default_rng(seed)
    copies = informative if mirror else 1
    if n % copies:
        raise ValueError(f"n={n} is not a multiple of {copies} mirrored copies")
    base = rng.standard_normal((n // copies, d))
    blocks = []
    for shift in range(copies):
        block = base.copy()
        block[:, :informative] = np.roll(base[:, :informative], shift, axis=1)
        blocks.append(block)
    X = np.vstack(blocks)
    cut = norm.ppf(1.0 - 0.5 ** (1.0 / informative))
    y = (X[:, :informative] > cut).all(axis=1).astype(int)
    stamps = _EPOCH + np.sort(rng.integers(0, 3 * 365 * 86400, size=n))
    names = [f"x{j}" for j in range(d)]
    return Dataset._build(_hashes(rng, n), stamps, X, y, names, f"informative(seed={seed})")


def joint_signal_dataset(n: int = 600, seed: int = 0) -> Dataset:
    """All 51 features; defects need both a large change (LA) and many AST additions (ASTA).

    A model restricted to the size/history/experience/review features sees
    only half of the mechanism.
    """
    rng = np.random.default_rng(seed)
    cols = {}
    for name in FEATURE_NAMES:
        if name in FLOAT_FEATURES:
            cols[name] = rng.gamma(2.0, 2.0, size=n)
        else:
            cols[name] = rng.poisson(4.0, size=n).astype(float)
    cols["LA"] = rng.poisson(rng.choice([5.0, 60.0], size=n)).astype(float)
    cols["ASTA"] = rng.poisson(rng.choice([3.0, 40.0], size=n)).astype(float)
    risky = (cols["LA"] > 25) & (cols["ASTA"] > 15)
    flip = rng.random(n) < 0.05
    y = (risky ^ flip).astype(int)
    X = np.column_stack([cols[name] for name in FEATURE_NAMES])
    stamps = _EPOCH + np.sort(rng.integers(0, 3 * 365 * 86400, size=n))
    return Dataset._build(_hashes(rng, n), stamps, X, y, list(FEATURE_NAMES),
                          f"joint-signal(seed={seed})")
