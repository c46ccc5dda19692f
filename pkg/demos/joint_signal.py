"""Synthetic check that the combined feature set beats the size/history baseline.

Defects in the generated data need both a large change (LA) and many added
syntax-tree nodes (ASTA). The SotA set only sees LA, so the model trained on
all 51 features should win clearly.

    python3 demos/joint_signal.py [seed]
"""

import sys

import numpy as np

from jitdp.experiment import run_evaluation, summarize
from jitdp.stats import compare_samples, stars
from jitdp.synthetic import joint_signal_dataset


def main(seed: int = 6):
    ds = joint_signal_dataset(n=600, seed=seed)
    print(f"{len(ds)} commits, {int(ds.y.sum())} defective")
    runs = {fs: run_evaluation(ds, feature_set=fs, seed=seed)
            for fs in ("sota", "workflow", "path", "all")}
    base = np.array([r.metrics["mcc"] for r in runs["sota"]])
    print(f"{'set':<9} {'MCC':>7} {'R@20%':>7}  MCC vs sota")
    for fs, folds in runs.items():
        s = summarize(folds)
        line = f"{fs:<9} {s['mcc'][0]:7.3f} {s['r_at_20'][0]:7.3f}"
        if fs != "sota":
            res = compare_samples(np.array([r.metrics["mcc"] for r in folds]), base, m=3)
            arrow = "+" if res.delta > 0 else "-"
            line += f"  {arrow} {stars(res.p_adjusted)} {res.effect_class}"
        print(line)


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 6)
