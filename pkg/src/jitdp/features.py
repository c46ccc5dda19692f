"""Change-level feature extraction (size/history/experience/review, workflow, AST change).

All features of one commit are computed from the history index *before*
the commit is added to it, so extraction over a prefix of the stream gives
the same rows as the corresponding prefix of a full run.
"""

from __future__ import annotations

import csv
import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional

from jitdp.forge import PRIndex, PRMatch, directory_of, map_commit_to_pr, subsystem_of
from jitdp.miner import CommitRecord
from jitdp.syntax import (ADAPTERS, COMMENT, PRIMITIVE, SPECIAL, ParseFailed, extract_methods,
                          parse, structurally_equal)
from jitdp.treediff import ADD, DELETE, UPDATE, diff_trees, max_change_depth

log = logging.getLogger(__name__)

SOTA_FEATURES = ["LA", "LD", "LT", "NS", "ND", "NF", "ENT", "NUC", "NDEV", "AGE", "EXP", "REXP",
                 "SEXP", "AWARE", "ITER", "NREV", "NCOM", "AGEREV"]
WORKFLOW_FEATURES = ["DUR", "NTH", "C-LA", "C-LD", "SHARE", "C-NS", "C-ND", "C-NF", "C-ENT",
                     "REL-NTH", "REL-DUR", "DEV-NTH", "DEV-DUR", "PRCOM", "PRCOM-R"]
PATH_FEATURES = ["FUN", "FUNT", "FUNDIFF", "FUNA", "FUND", "FUNU", "ASTA", "ASTD", "ASTU",
                 "SASTA", "SASTD", "CASTA", "CASTD", "PASTA", "PASTD", "DEPTHA", "DEPTHD",
                 "DEPTHU"]
FEATURE_NAMES = SOTA_FEATURES + WORKFLOW_FEATURES + PATH_FEATURES
FEATURE_SETS = {
    "sota": SOTA_FEATURES,
    "workflow": WORKFLOW_FEATURES,
    "path": PATH_FEATURES,
    "all": FEATURE_NAMES,
}
FLOAT_FEATURES = frozenset({"ENT", "AGE", "REXP", "AWARE", "AGEREV", "DUR", "SHARE", "C-ENT",
                            "REL-DUR", "DEV-DUR"})

DAY = 86400.0
HOUR = 3600.0
YEAR = 31557600.0  # Julian year


class LabelError(ValueError):
    pass


@dataclass
class FeatureVector:
    commit_hash: str
    timestamp: int
    features: dict
    label: Optional[int] = None


@dataclass
class ExtractionReport:
    commits: int = 0
    labeled: int = 0
    dropped_unlabeled: int = 0
    parse_failures: int = 0
    pr_matches: Counter = field(default_factory=Counter)
    warnings: list = field(default_factory=list)

    def warn(self, message: str) -> None:
        log.warning(message)
        self.warnings.append(message)

    @property
    def pr_match_rate(self) -> float:
        hits = self.pr_matches["hash"] + self.pr_matches["message"]
        return hits / self.commits if self.commits else 0.0


def entropy(masses: Iterable[float]) -> float:
    """Shannon entropy of the mass split, normalized by log2 of the bucket count."""
    masses = list(masses)
    total = sum(masses)
    if len(masses) <= 1 or total <= 0:
        return 0.0
    h = 0.0 - sum((m / total) * math.log2(m / total) for m in masses if m > 0)  # no -0.0
    return h / math.log2(len(masses))


class HistoryIndex:
    """Causal per-file, per-author and per-subsystem bookkeeping."""

    def __init__(self):
        self.position = 0
        self.file_last_change: dict[str, int] = {}
        self.file_commits: dict[str, set] = defaultdict(set)
        self.file_authors: dict[str, set] = defaultdict(set)
        self.author_times: dict[str, list] = defaultdict(list)
        self.author_subsystems: dict[str, Counter] = defaultdict(Counter)
        self.subsystem_total: Counter = Counter()
        self.last_release: Optional[tuple] = None  # (hash, time, position)
        self.author_last: dict[str, tuple] = {}  # author -> (time, position)

    def update(self, commit: CommitRecord) -> None:
        self.position += 1
        for change in commit.changes:
            self.file_last_change[change.path] = commit.author_time
            self.file_commits[change.path].add(commit.hash)
            self.file_authors[change.path].add(commit.author_id)
        for subsystem in {subsystem_of(c.path) for c in commit.changes}:
            self.author_subsystems[commit.author_id][subsystem] += 1
            self.subsystem_total[subsystem] += 1
        self.author_times[commit.author_id].append(commit.author_time)
        self.author_last[commit.author_id] = (commit.author_time, self.position)
        if commit.is_release:
            self.last_release = (commit.hash, commit.author_time, self.position)


# -- SotA ----------------------------------------------------------------------

def size_diffusion(commit: CommitRecord) -> dict:
    changes = commit.changes
    return {
        "LA": sum(c.lines_added for c in changes),
        "LD": sum(c.lines_deleted for c in changes),
        "LT": sum(c.size_before for c in changes),
        "NS": len({subsystem_of(c.path) for c in changes}),
        "ND": len({directory_of(c.path) for c in changes}),
        "NF": len(changes),
        "ENT": entropy(c.lines_added + c.lines_deleted for c in changes),
    }


def history(commit: CommitRecord, index: HistoryIndex) -> dict:
    prior_commits, prior_authors = set(), set()
    ages = []
    for change in commit.changes:
        prior_commits |= index.file_commits.get(change.path, set())
        prior_authors |= index.file_authors.get(change.path, set())
        last = index.file_last_change.get(change.path)
        ages.append(0.0 if last is None else (commit.author_time - last) / DAY)
    return {
        "NUC": len(prior_commits),
        "NDEV": len(prior_authors),
        "AGE": sum(ages) / len(ages) if ages else 0.0,
    }


def experience(commit: CommitRecord, index: HistoryIndex) -> dict:
    times = index.author_times.get(commit.author_id, [])
    rexp = sum(1.0 / ((commit.author_time - t) / YEAR + 1.0) for t in times)
    subsystems = {subsystem_of(c.path) for c in commit.changes}
    mine = index.author_subsystems.get(commit.author_id, Counter())
    sexp = sum(mine[s] for s in subsystems)
    total = sum(index.subsystem_total[s] for s in subsystems)
    return {
        "EXP": len(times),
        "REXP": rexp,
        "SEXP": sexp,
        "AWARE": sexp / total if total else 0.0,
    }


def reference_time(commit: CommitRecord, match: Optional[PRMatch]) -> int:
    """Clock used for PR-event cut-offs: the inner commit's time when matched."""
    return match.inner.author_time if match is not None else commit.author_time


def review(commit: CommitRecord, match: Optional[PRMatch]) -> dict:
    if match is None:
        return {"ITER": 0, "NREV": 0, "NCOM": 0, "AGEREV": 0.0}
    t = reference_time(commit, match)
    pr = match.pr
    reviews = [r for r in pr.reviews if r.submitted_at < t]
    approvals = [r.submitted_at for r in reviews if r.state == "approved"]
    if approvals:
        end = max(approvals)
    elif pr.merged_at is not None and pr.merged_at < t:
        end = pr.merged_at
    else:
        end = None
    agerev = 0.0 if end is None else max(0.0, (end - pr.review_requested) / HOUR)
    return {
        "ITER": len(reviews),
        "NREV": len({r.reviewer_id for r in reviews}),
        "NCOM": sum(r.comment_count for r in reviews),
        "AGEREV": agerev,
    }


# -- WORKFLOW ------------------------------------------------------------------

def workflow(commit: CommitRecord, match: Optional[PRMatch], index: HistoryIndex) -> dict:
    out = dict.fromkeys(WORKFLOW_FEATURES, 0)
    for name in ("DUR", "SHARE", "C-ENT", "REL-DUR", "DEV-DUR"):
        out[name] = 0.0
    position = index.position + 1
    if index.last_release is not None:
        _, rel_time, rel_pos = index.last_release
        out["REL-NTH"] = position - rel_pos
        out["REL-DUR"] = (commit.author_time - rel_time) / HOUR
    last = index.author_last.get(commit.author_id)
    if last is not None:
        out["DEV-NTH"] = position - last[1]
        out["DEV-DUR"] = (commit.author_time - last[0]) / HOUR
    if match is None:
        return out

    pr, nth = match.pr, match.position
    t = reference_time(commit, match)
    feature_commits = pr.inner_commits[:nth]
    start = min([pr.created_at] + [c.author_time for c in pr.inner_commits[:1]])
    c_la = sum(c.lines_added for c in feature_commits)
    c_ld = sum(c.lines_deleted for c in feature_commits)
    files, per_file = set(), Counter()
    for inner in feature_commits:
        files.update(inner.files)
        for path, lines in inner.per_file_lines().items():
            per_file[path] += lines
    comments = [c for c in pr.comments if c.created_at < t]
    current = match.inner.lines_added + match.inner.lines_deleted
    out.update({
        "DUR": max(0.0, (t - start) / HOUR),
        "NTH": nth,
        "C-LA": c_la,
        "C-LD": c_ld,
        "SHARE": current / (c_la + c_ld) if c_la + c_ld else 0.0,
        "C-NS": len({subsystem_of(p) for p in files}),
        "C-ND": len({directory_of(p) for p in files}),
        "C-NF": len(files),
        "C-ENT": entropy(per_file[p] for p in sorted(files)),
        "PRCOM": len(comments),
        "PRCOM-R": sum(c.reaction_count for c in comments),
    })
    return out


# -- PATH ----------------------------------------------------------------------

def _snapshots(change) -> Optional[tuple[str, str]]:
    if change.language not in ADAPTERS:
        return None
    before = "" if change.status == "A" else change.before_text
    after = "" if change.status == "D" else change.after_text
    if before is None or after is None:
        return None
    return before, after


def _pair_methods(before: list, after: list):
    by_name_b, by_name_a = defaultdict(list), defaultdict(list)
    for m in before:
        by_name_b[m.name].append(m)
    for m in after:
        by_name_a[m.name].append(m)
    pairs, added, deleted = [], 0, 0
    for name in set(by_name_b) | set(by_name_a):
        olds, news = by_name_b.get(name, []), by_name_a.get(name, [])
        pairs.extend(zip(olds, news))
        added += max(0, len(news) - len(olds))
        deleted += max(0, len(olds) - len(news))
    return pairs, added, deleted


def file_path_features(before_tree, after_tree) -> dict:
    """PATH features of one file given its two parsed versions."""
    methods_b = extract_methods(before_tree)
    methods_a = extract_methods(after_tree)
    pairs, added, deleted = _pair_methods(methods_b, methods_a)
    script = diff_trees(before_tree, after_tree)
    funt_before = sum(m.loc for m in methods_b)

    def count(items, category):
        return sum(1 for item in items if item.category == category)

    return {
        "FUN": len(methods_b),
        "FUNT": funt_before,
        "FUNDIFF": sum(m.loc for m in methods_a) - funt_before,
        "FUNA": added,
        "FUND": deleted,
        "FUNU": sum(1 for old, new in pairs if not diff_trees(old.subtree, new.subtree).is_empty()),
        "ASTA": len(script.adds),
        "ASTD": len(script.deletes),
        "ASTU": len(script.updates),
        "SASTA": count(script.adds, SPECIAL),
        "SASTD": count(script.deletes, SPECIAL),
        "CASTA": count(script.adds, COMMENT),
        "CASTD": count(script.deletes, COMMENT),
        "PASTA": count(script.adds, PRIMITIVE),
        "PASTD": count(script.deletes, PRIMITIVE),
        "DEPTHA": max_change_depth(script, ADD),
        "DEPTHD": max_change_depth(script, DELETE),
        "DEPTHU": max_change_depth(script, UPDATE),
    }


def path_features(commit: CommitRecord, report: Optional[ExtractionReport] = None) -> dict:
    totals = dict.fromkeys(PATH_FEATURES, 0)
    for change in commit.changes:
        texts = _snapshots(change)
        if texts is None:
            continue
        try:
            before = parse(texts[0], change.language)
            after = parse(texts[1], change.language)
        except ParseFailed as exc:
            if report is not None:
                report.parse_failures += 1
                report.warn(f"{commit.hash[:10]} {change.path}: {exc}; PATH features skipped")
            continue
        if structurally_equal(before, after):
            continue  # e.g. whitespace-only edits: syntactically unchanged
        for name, value in file_path_features(before, after).items():
            if name.startswith("DEPTH"):
                totals[name] = max(totals[name], value)
            else:
                totals[name] += value
    return totals


# -- driver --------------------------------------------------------------------

def load_labels(path) -> tuple[dict[str, int], bool]:
    """Read ``commit_hash,label`` rows; returns (labels, complete_coverage)."""
    labels, complete = {}, False
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or not row[0].strip():
                continue
            first = row[0].strip()
            if first.startswith("#"):
                if first.replace(" ", "").lower() == "#coverage=complete":
                    complete = True
                continue
            if first == "commit_hash":
                continue
            if len(row) < 2:
                raise LabelError(f"{path}: row for {first} has no label")
            raw = row[1].strip().lower()
            if raw in ("1", "defect-inducing", "true"):
                value = 1
            elif raw in ("0", "clean", "false"):
                value = 0
            else:
                raise LabelError(f"{path}: bad label {row[1]!r} for {first}")
            if first in labels:
                raise LabelError(f"{path}: duplicate commit hash {first}")
            labels[first] = value
    return labels, complete


def extract_features(commit: CommitRecord, index: HistoryIndex, match: Optional[PRMatch],
                     report: Optional[ExtractionReport] = None) -> dict:
    values = {}
    values.update(size_diffusion(commit))
    values.update(history(commit, index))
    values.update(experience(commit, index))
    values.update(review(commit, match))
    values.update(workflow(commit, match, index))
    values.update(path_features(commit, report))
    return {name: values[name] for name in FEATURE_NAMES}


def extract_all(commits: Iterable[CommitRecord], prs=(), labels: Optional[dict] = None, *,
                complete: bool = False,
                report: Optional[ExtractionReport] = None) -> list[FeatureVector]:
    """One sequential pass over an (outlier-filtered) commit stream.

    With ``labels`` given, unlabeled commits become clean when ``complete``
    is set and are dropped otherwise.
    """
    report = report if report is not None else ExtractionReport()
    index = HistoryIndex()
    pr_index = PRIndex.build(prs)
    rows, seen = [], set()
    for commit in commits:
        report.commits += 1
        seen.add(commit.hash)
        match = map_commit_to_pr(commit, pr_index, report.pr_matches)
        values = extract_features(commit, index, match, report)
        index.update(commit)
        label = None
        if labels is not None:
            label = labels.get(commit.hash)
            if label is None:
                if not complete:
                    report.dropped_unlabeled += 1
                    continue
                label = 0
            report.labeled += 1
        rows.append(FeatureVector(commit.hash, commit.author_time, values, label))
    if labels is not None:
        if report.dropped_unlabeled:
            report.warn(f"dropped {report.dropped_unlabeled} commits without a label")
        missing = sorted(set(labels) - seen)
        if missing:
            report.warn(f"{len(missing)} labeled hashes not in the commit stream")
    return rows
