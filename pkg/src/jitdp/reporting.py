"""CSV and markdown emitters for evaluation, comparison and importance results."""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from jitdp.evaluation import METRIC_NAMES
from jitdp.stats import ImportanceGroup, StatResult, bonferroni, cliffs_delta, stars, \
    wilcoxon_signed_rank

REPORT_HEADER = ["project", "scheme", "feature_set", "fold", "metric", "value"]
METRIC_LABELS = {
    "precision": "P", "recall": "R", "f1": "F1", "mcc": "MCC",
    "r_at_20": "R@20%", "f1_at_20": "F1@20%", "pci_at_20": "PCI@20%", "ifa": "IFA",
}


class ReportError(ValueError):
    """A report file is malformed or two reports cannot be compared."""


def fmt(value: float) -> str:
    return format(float(value), ".12g")


def write_report_csv(fp, project: str, scheme: str, results: dict) -> None:
    """``results`` maps feature set -> list of FoldResult (ordered by fold)."""
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    for feature_set, folds in results.items():
        for fold in folds:
            for metric in METRIC_NAMES:
                writer.writerow([project, scheme, feature_set, fold.fold, metric,
                                 fmt(fold.metrics[metric])])


@dataclass
class Report:
    project: str
    scheme: str
    # feature set -> metric -> {fold: value}
    values: dict

    @property
    def feature_sets(self) -> list:
        return list(self.values)


def read_report_csv(path) -> Report:
    values = defaultdict(lambda: defaultdict(dict))
    projects, schemes = set(), set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != REPORT_HEADER:
            raise ReportError(f"{path}: expected header {','.join(REPORT_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(REPORT_HEADER):
                raise ReportError(f"{path}:{lineno}: expected {len(REPORT_HEADER)} columns")
            project, scheme, feature_set, fold, metric, value = row
            if metric not in METRIC_NAMES:
                raise ReportError(f"{path}:{lineno}: unknown metric {metric!r}")
            try:
                values[feature_set][metric][int(fold)] = float(value)
            except ValueError:
                raise ReportError(f"{path}:{lineno}: bad fold or value") from None
            projects.add(project)
            schemes.add(scheme)
    if not values:
        raise ReportError(f"{path}: no rows")
    if len(projects) > 1 or len(schemes) > 1:
        raise ReportError(f"{path}: mixes several projects or schemes")
    return Report(projects.pop(), schemes.pop(),
                  {fs: {m: dict(v) for m, v in ms.items()} for fs, ms in values.items()})


def evaluation_markdown(project: str, scheme: str, model: str, summaries: dict,
                        settings: dict) -> str:
    """``summaries`` maps feature set -> metric -> (mean, std)."""
    out = io.StringIO()
    out.write(f"# Evaluation: {project}\n\n")
    for key in sorted(settings):
        out.write(f"- {key}: {settings[key]}\n")
    out.write(f"\nScheme `{scheme}`, model `{model}`; mean ± std over folds.\n\n")
    out.write("| Feature set | " + " | ".join(METRIC_LABELS[m] for m in METRIC_NAMES) + " |\n")
    out.write("|---|" + "---:|" * len(METRIC_NAMES) + "\n")
    for feature_set, summary in summaries.items():
        cells = [f"{summary[m][0]:.3f} ± {summary[m][1]:.3f}" for m in METRIC_NAMES]
        out.write(f"| {feature_set} | " + " | ".join(cells) + " |\n")
    return out.getvalue()


@dataclass(frozen=True)
class Comparison:
    feature_set: str
    metric: str
    baseline_mean: float
    treatment_mean: float
    change_pct: float
    result: StatResult


def resolve_baseline(baseline: Report, name: str | None = None) -> str:
    """The named feature set, else ``sota``, else the report's only set."""
    if name is None:
        if "sota" in baseline.values:
            return "sota"
        if len(baseline.values) == 1:
            return baseline.feature_sets[0]
        raise ReportError("baseline report holds several feature sets; choose one")
    if name not in baseline.values:
        raise ReportError(f"baseline feature set {name!r} not in baseline report")
    return name


def compare_reports(baseline: Report, treatment: Report, baseline_set: str | None = None,
                    metrics=METRIC_NAMES) -> list[Comparison]:
    """Pairwise fold-matched comparison of each treatment feature set with the baseline.

    p-values are Bonferroni-adjusted over the number of compared feature sets.
    """
    baseline_set = resolve_baseline(baseline, baseline_set)
    base = baseline.values[baseline_set]
    # a combined report may carry the baseline set too; it is not compared with itself
    sets = [fs for fs in treatment.feature_sets if fs != baseline_set] or [baseline_set]
    m = len(sets)
    rows = []
    for fs in sets:
        for metric in metrics:
            a, b = treatment.values[fs].get(metric), base.get(metric)
            if a is None or b is None:
                raise ReportError(f"metric {metric!r} missing for {fs} or baseline")
            if sorted(a) != sorted(b):
                raise ReportError(f"fold mismatch for {fs}/{metric}: treatment folds "
                                  f"{sorted(a)[:5]}..., baseline folds {sorted(b)[:5]}...")
            folds = sorted(a)
            ta = np.array([a[f] for f in folds])
            ba = np.array([b[f] for f in folds])
            p = wilcoxon_signed_rank(ta, ba)
            delta, cls = cliffs_delta(ta, ba)
            result = StatResult(p, bonferroni([p], m)[0], delta, cls, int(np.sign(delta)))
            bm, tm = float(ba.mean()), float(ta.mean())
            change = (tm - bm) / abs(bm) * 100.0 if bm else 0.0
            rows.append(Comparison(fs, metric, bm, tm, change, result))
    return rows


COMPARE_HEADER = ["feature_set", "metric", "baseline_mean", "treatment_mean", "change_pct",
                  "p_raw", "p_adjusted", "stars", "delta", "effect_class"]


def write_compare_csv(fp, rows: list[Comparison]) -> None:
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(COMPARE_HEADER)
    for r in rows:
        writer.writerow([r.feature_set, r.metric, fmt(r.baseline_mean), fmt(r.treatment_mean),
                         fmt(r.change_pct), fmt(r.result.p_raw), fmt(r.result.p_adjusted),
                         stars(r.result.p_adjusted), fmt(r.result.delta),
                         r.result.effect_class])


def compare_markdown(rows: list[Comparison], baseline_set: str) -> str:
    """One row per feature set; each metric cell reads ``value (+x.x%) stars letter``."""
    metrics = list(dict.fromkeys(r.metric for r in rows))
    by_set = defaultdict(dict)
    base = {}
    for r in rows:
        by_set[r.feature_set][r.metric] = r
        base[r.metric] = r.baseline_mean
    out = io.StringIO()
    out.write(f"# Comparison against `{baseline_set}`\n\n")
    out.write("| Feature set | " + " | ".join(METRIC_LABELS[m] for m in metrics) + " |\n")
    out.write("|---|" + "---:|" * len(metrics) + "\n")
    out.write(f"| {baseline_set} | " + " | ".join(f"{base[m]:.3f}" for m in metrics) + " |\n")
    for fs, cells in by_set.items():
        text = []
        for m in metrics:
            r = cells[m]
            text.append(f"{r.treatment_mean:.3f} ({r.change_pct:+.1f}%) "
                        f"{stars(r.result.p_adjusted)} {r.result.effect_class}")
        out.write(f"| {fs} | " + " | ".join(text) + " |\n")
    out.write("\nStars from Bonferroni-adjusted Wilcoxon p: **** < 1e-4, *** < 0.001, "
              "** < 0.01, * < 0.1, ns otherwise. Letters give Cliff's delta: "
              "N negligible, S small, M medium, L large.\n")
    return out.getvalue()


IMPORTANCE_HEADER = ["feature", "group", "median_importance"]


def write_importance_csv(fp, groups: list[ImportanceGroup]) -> None:
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(IMPORTANCE_HEADER)
    for group in groups:
        for name, median in zip(group.members, group.medians):
            writer.writerow([name, group.rank, fmt(median)])


def importance_markdown(project: str, groups: list[ImportanceGroup], top: int = 3) -> str:
    out = io.StringIO()
    out.write(f"# Feature importance: {project}\n\n")
    out.write("| Rank | Features (top by median MDI) | Group size |\n|---:|---|---:|\n")
    for group in groups[:top]:
        ranked = sorted(zip(group.members, group.medians), key=lambda t: (-t[1], t[0]))
        names = ", ".join(f"{n} ({m:.3f})" for n, m in ranked[:top])
        out.write(f"| {group.rank} | {names} | {len(group.members)} |\n")
    return out.getvalue()
