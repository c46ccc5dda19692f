"""``jitdp`` command line: extract, evaluate, compare, importance, fixture-gen, debug."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from jitdp import experiment
from jitdp.dataset import SplitError, read_csv, write_csv
from jitdp.evaluation import BUDGET
from jitdp.features import FEATURE_SETS, ExtractionReport, LabelError, extract_all, load_labels
from jitdp.forge import FixtureError, ForgeClient, RepositoryNotFound, load_fixtures
from jitdp.learner import SchemaError
from jitdp.miner import MiningReport, RepositoryError, filter_outliers, walk_history
from jitdp.reporting import (ReportError, compare_markdown, compare_reports, evaluation_markdown,
                             importance_markdown, read_report_csv, resolve_baseline,
                             write_compare_csv, write_importance_csv, write_report_csv)
from jitdp.stats import npsk_groups

log = logging.getLogger("jitdp")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

# fallbacks applied after the config file; flags always win
DEFAULTS = {
    "out": ".",
    "features": "all",
    "scheme": "cv",
    "model": "rf",
    "budget": BUDGET,
    "scale_on": "train",
    "jobs": 1,
    "censor": False,
    "skip_merges": False,
    "detect_renames": False,
    "folds": 10,
    "times": 10,
}


class UsageError(Exception):
    pass


class StageError(Exception):
    def __init__(self, stage, exc):
        super().__init__(f"{stage}: {exc}")


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (RepositoryError, RepositoryNotFound, FixtureError, LabelError, SplitError,
            SchemaError, ReportError, OSError, ValueError) as exc:
        raise StageError(name, exc) from exc


def _feature_sets(text: str) -> list[str]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    unknown = [n for n in names if n not in FEATURE_SETS]
    if unknown or not names:
        raise UsageError(f"--features: unknown feature set(s) {unknown}; "
                         f"choose from {', '.join(FEATURE_SETS)}")
    return names


def _out(cfg) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _in_path(cfg, value, default_name) -> Path:
    path = Path(value) if value else Path(cfg.out) / default_name
    return path


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _require_seed(cfg):
    if cfg.seed is None:
        raise UsageError("--seed is required for this command (it controls all randomness)")


# -- commands -------------------------------------------------------------------------------

def cmd_extract(cfg) -> int:
    if not cfg.labels:
        raise UsageError("--labels: a label file is required")
    if not Path(cfg.labels).is_file():
        raise UsageError(f"--labels: file not found: {cfg.labels}")
    if not cfg.repo:
        raise UsageError("--repo: a repository path is required")
    if cfg.fixtures and cfg.forge_repo:
        raise UsageError("--fixtures and --forge-repo are mutually exclusive data sources")
    if cfg.forge_repo and not cfg.forge_cache:
        raise UsageError("--forge-repo needs --forge-cache for the on-disk cache")

    labels, complete = _stage("labels", load_labels, cfg.labels)
    if cfg.fixtures:
        prs = _stage("forge", load_fixtures, cfg.fixtures)
    elif cfg.forge_repo:
        client = ForgeClient(cfg.forge_repo, cfg.forge_cache, token=os.environ.get("FORGE_TOKEN"))
        prs = _stage("forge", client.fetch_pull_requests)
    elif cfg.forge_cache:
        prs = _stage("forge", load_fixtures, cfg.forge_cache)
    else:
        prs = []

    mining = MiningReport()
    commits = _stage("mine", walk_history, cfg.repo, skip_merges=cfg.skip_merges,
                     detect_renames=cfg.detect_renames, report=mining)
    commits = filter_outliers(commits, report=mining)
    report = ExtractionReport()
    vectors = _stage("features", extract_all, commits, prs, labels, complete=complete,
                     report=report)

    out = _out(cfg)
    target = out / (cfg.dataset or "dataset.csv")
    with open(target, "w", encoding="utf-8", newline="") as fh:
        write_csv(vectors, fh)
    summary = {
        "commits_seen": mining.commits_seen,
        "outliers_removed": mining.outliers_removed,
        "rows": len(vectors),
        "labeled": report.labeled,
        "dropped_unlabeled": report.dropped_unlabeled,
        "parse_failures": report.parse_failures,
        "pull_requests": len(prs),
        "pr_matches": dict(sorted(report.pr_matches.items())),
        "pr_match_rate": round(report.pr_match_rate, 6),
        "warnings": mining.warnings + report.warnings,
    }
    _write(out / "extraction.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(vectors)} rows to {target}")
    return EXIT_OK


def _load_dataset(cfg):
    path = _in_path(cfg, cfg.dataset, "dataset.csv")
    if not path.is_file():
        raise UsageError(f"--dataset: file not found: {path}")
    return path, _stage("dataset", read_csv, path)


def cmd_evaluate(cfg) -> int:
    sets = _feature_sets(cfg.features)
    if cfg.model not in experiment.MODELS:
        raise UsageError(f"--model: choose from {', '.join(experiment.MODELS)}")
    if cfg.scheme not in experiment.SCHEMES:
        raise UsageError(f"--scheme: choose from {', '.join(experiment.SCHEMES)}")
    _require_seed(cfg)
    path, ds = _load_dataset(cfg)
    project = cfg.project or path.stem
    results, summaries = {}, {}
    for fs in sets:
        folds = _stage("evaluate", experiment.run_evaluation, ds, feature_set=fs,
                       scheme=cfg.scheme, model=cfg.model, seed=cfg.seed, budget=cfg.budget,
                       scale_on=cfg.scale_on, censor=cfg.censor, jobs=cfg.jobs,
                       k=cfg.folds, times=cfg.times)
        if not folds:
            raise StageError("evaluate", SplitError(f"scheme {cfg.scheme} produced no folds"))
        results[fs] = folds
        summaries[fs] = experiment.summarize(folds)
    out = _out(cfg)
    name = cfg.name or "evaluation"
    with open(out / f"{name}.csv", "w", encoding="utf-8", newline="") as fh:
        write_report_csv(fh, project, cfg.scheme, results)
    settings = {"seed": cfg.seed, "budget": cfg.budget, "scale-on": cfg.scale_on,
                "censor": cfg.censor, "rows": len(ds)}
    if cfg.scheme == "cv":
        settings["folds"] = f"{cfg.times}x{cfg.folds}"
    _write(out / f"{name}.md", evaluation_markdown(project, cfg.scheme, cfg.model, summaries,
                                                    settings))
    print(f"wrote {out / name}.csv and {out / name}.md")
    return EXIT_OK


def cmd_compare(cfg) -> int:
    baseline = _stage("compare", read_report_csv, cfg.baseline)
    treatment = _stage("compare", read_report_csv, cfg.treatment)
    base_set = _stage("compare", resolve_baseline, baseline, cfg.baseline_set)
    rows = _stage("compare", compare_reports, baseline, treatment, base_set)
    out = _out(cfg)
    name = cfg.name or "comparison"
    with open(out / f"{name}.csv", "w", encoding="utf-8", newline="") as fh:
        write_compare_csv(fh, rows)
    _write(out / f"{name}.md", compare_markdown(rows, base_set))
    print(f"wrote {out / name}.csv and {out / name}.md")
    return EXIT_OK


def cmd_importance(cfg) -> int:
    sets = _feature_sets(cfg.features)
    if len(sets) != 1:
        raise UsageError("--features: importance takes a single feature set")
    _require_seed(cfg)
    path, ds = _load_dataset(cfg)
    ds = ds.select(FEATURE_SETS[sets[0]])
    dist = _stage("importance", experiment.importance_distributions, ds, seed=cfg.seed,
                  k=cfg.folds, times=cfg.times, jobs=cfg.jobs)
    groups = npsk_groups(dist)
    out = _out(cfg)
    name = cfg.name or "importance"
    with open(out / f"{name}.csv", "w", encoding="utf-8", newline="") as fh:
        write_importance_csv(fh, groups)
    _write(out / f"{name}.md", importance_markdown(cfg.project or path.stem, groups))
    print(f"wrote {out / name}.csv and {out / name}.md")
    return EXIT_OK


def cmd_fixture_gen(cfg) -> int:
    from jitdp.fixture import build_fixture

    out = _out(cfg)
    try:
        built = build_fixture(out)
    except FileExistsError as exc:
        raise UsageError(f"--out: {exc}") from None
    except Exception as exc:  # git failures surface as CalledProcessError
        raise StageError("fixture-gen", exc) from exc
    print(f"fixture written to {out}: repo/, prs/, labels.csv "
          f"({len(built['first_parent'])} commits)")
    return EXIT_OK


def cmd_debug_tree(cfg) -> int:
    from jitdp.syntax import language_for, parse

    text = Path(cfg.file).read_text(encoding="utf-8")
    language = cfg.language or language_for(cfg.file)
    tree = _stage("parse", parse, text, language)
    text = tree.dump()
    sys.stdout.write(text if text.endswith("\n") else text + "\n")
    return EXIT_OK


def cmd_debug_diff(cfg) -> int:
    from jitdp.syntax import language_for, parse
    from jitdp.treediff import diff_trees

    language = cfg.language or language_for(cfg.after)
    before = _stage("parse", parse, Path(cfg.before).read_text(encoding="utf-8"), language)
    after = _stage("parse", parse, Path(cfg.after).read_text(encoding="utf-8"), language)
    sys.stdout.write(diff_trees(before, after).to_jsonl())
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (default: current directory)")
    common.add_argument("--config", help="JSON file with option values; flags override it")
    common.add_argument("--seed", type=int, help="seed for every stochastic step")
    common.add_argument("--jobs", type=int, help="parallel fold workers")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="jitdp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("extract", parents=[common], help="mine a repository into a dataset CSV")
    p.add_argument("--repo", help="path to the git repository")
    p.add_argument("--labels", help="CSV of commit_hash,label")
    p.add_argument("--fixtures", help="directory of pr-*.json pull request fixtures")
    p.add_argument("--forge-repo", help="owner/name to fetch pull requests for")
    p.add_argument("--forge-cache", help="pull request cache directory")
    p.add_argument("--skip-merges", action="store_true", default=None)
    p.add_argument("--detect-renames", action="store_true", default=None)
    p.add_argument("--dataset", help="output CSV name inside --out (default dataset.csv)")
    p.set_defaults(func=cmd_extract)

    for name, func, helptext in (("evaluate", cmd_evaluate, "train and score per fold"),
                                 ("importance", cmd_importance, "MDI importance + NPSK groups")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--dataset", help="dataset CSV (default: <out>/dataset.csv)")
        p.add_argument("--features", help="feature set(s): sota, workflow, path, all")
        p.add_argument("--project", help="project name in reports (default: dataset stem)")
        p.add_argument("--name", help="report file stem")
        p.add_argument("--folds", type=int, help="k of k-fold CV (default 10)")
        p.add_argument("--times", type=int, help="CV repetitions (default 10)")
        if name == "evaluate":
            p.add_argument("--scheme", help="cv, short-term or long-term")
            p.add_argument("--model", help="rf, cbs+, ealr, lt or churn")
            p.add_argument("--budget", type=float, help="effort budget fraction (default 0.2)")
            p.add_argument("--scale-on", choices=("train", "test"))
            p.add_argument("--censor", action="store_true", default=None,
                           help="drop the last 6 months before time-based splits")
        p.set_defaults(func=func)

    p = sub.add_parser("compare", parents=[common], help="significance of report differences")
    p.add_argument("baseline", help="baseline report CSV")
    p.add_argument("treatment", help="treatment report CSV")
    p.add_argument("--baseline-set", help="feature set used as baseline (default sota)")
    p.add_argument("--name", help="output file stem")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("fixture-gen", parents=[common], help="build the synthetic fixture repo")
    p.set_defaults(func=cmd_fixture_gen)

    p = sub.add_parser("debug", help="inspect parsing and tree differencing")
    dsub = p.add_subparsers(dest="what", required=True, parser_class=_Parser)
    t = dsub.add_parser("tree", help="dump a syntax tree as indented text")
    t.add_argument("file")
    t.add_argument("--language")
    t.set_defaults(func=cmd_debug_tree)
    d = dsub.add_parser("diff", help="edit script between two files as JSON lines")
    d.add_argument("before")
    d.add_argument("after")
    d.add_argument("--language")
    d.set_defaults(func=cmd_debug_diff)
    return parser


def _resolve(args) -> argparse.Namespace:
    values = vars(args).copy()
    if values.get("config"):
        try:
            with open(values["config"], encoding="utf-8") as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"--config: {exc}") from None
        if not isinstance(config, dict):
            raise UsageError("--config: expected a JSON object")
        for key, value in config.items():
            key = key.replace("-", "_")
            if key not in values:
                raise UsageError(f"--config: unknown option {key!r}")
            if values[key] is None:
                values[key] = value
    for key, value in DEFAULTS.items():
        if values.get(key) is None:
            values[key] = value
    return argparse.Namespace(**values)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        cfg = _resolve(parser.parse_args(argv))
        logging.basicConfig(level=logging.INFO if getattr(cfg, "verbose", False)
                            else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
        return cfg.func(cfg)
    except UsageError as exc:
        print(f"jitdp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"jitdp: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
