"""Walk the bundled fixture through every CLI stage.

Run from anywhere:  python3 demos/fixture_walkthrough.py [workdir]

The fixture is a 12-commit MiniLang project with two pull requests. It has
only four defect-inducing commits, so cross validation runs with 4 folds.
"""

import sys
import tempfile
from pathlib import Path

from jitdp.cli import main


def run(*argv):
    print("$ jitdp", " ".join(argv))
    code = main(list(argv))
    if code:
        sys.exit(code)


def demo(work: Path):
    fx, out = work / "fixture", work / "out"
    run("fixture-gen", "--out", str(fx))
    run("extract", "--repo", str(fx / "repo"), "--labels", str(fx / "labels.csv"),
        "--fixtures", str(fx / "prs"), "--out", str(out))
    print((out / "extraction.json").read_text())

    for scheme in ("cv", "short-term", "long-term"):
        run("evaluate", "--seed", "7", "--folds", "4", "--times", "2", "--scheme", scheme,
            "--features", "sota,workflow,path,all", "--name", f"eval-{scheme}", "--out", str(out))
    print((out / "eval-cv.md").read_text())

    report = str(out / "eval-cv.csv")
    run("compare", report, report, "--out", str(out))
    print((out / "comparison.md").read_text())

    run("importance", "--seed", "7", "--folds", "4", "--times", "2", "--features", "sota",
        "--out", str(out))
    print((out / "importance.md").read_text())


if __name__ == "__main__":
    if len(sys.argv) > 1:
        demo(Path(sys.argv[1]))
    else:
        with tempfile.TemporaryDirectory() as tmp:
            demo(Path(tmp))
