"""Builds the small deterministic repository used by the golden extraction check.

Layout written under ``out``::

    repo/            git repository, 12 first-parent commits, tag v1.0
    prs/pr-*.json    two merged pull requests (one rebase-merged, one squashed)
    labels.csv       defect labels, complete coverage
"""

from __future__ import annotations

import hashlib
import os
import subprocess
from pathlib import Path

from jitdp.forge import Comment, InnerCommit, PullRequestRecord, ReviewEvent, save_pr
from jitdp.miner import line_delta

T0 = 1_600_000_000  # 2020-09-13; history spans about 14 months
DAY = 86_400
HOUR = 3_600

PEOPLE = {
    "alice": "Alice Moreau <alice@example.org>",
    "bob": "Bob Okafor <bob@example.org>",
    "carol": "Carol Jensen <carol@example.org>",
    "dave": "Dave Liu <dave@example.org>",
}

CALC_V1 = """\
// arithmetic helpers
fn add(a, b) {
  return a + b;
}

fn sub(a, b) {
  return a - b;
}
"""

CALC_V2 = """\
// arithmetic helpers
fn add(a, b) {
  return a + b;
}

fn sub(a, b) {
  // clamp at zero
  if (a < b) {
    return 0;
  }
  return a - b;
}
"""

CALC_V3 = CALC_V2 + """
fn mul(a, b) {
  if (b == 0) {
    return 0;
  }
  return a * b;
}
"""

CALC_V4 = CALC_V2 + """
fn mul(a, b) {
  if (b == 1) {
    return a;
  }
  r = 0;
  while (b > 0) {
    r = r + a;
    b = b - 1;
  }
  return r;
}
"""

CALC_V5 = """\
// arithmetic helpers (integers only)
fn add(a, b) {
  return a + b;
}

fn mul(a, b) {
  if (b == 1) {
    return a;
  }
  r = 0;
  while (b > 0) {
    r = r + a;
    b = b - 1;
  }
  return r;
}
"""

CALC_V6 = CALC_V5.replace("return a + b;", "return add2(a, b, 0);")

STRINGS_V1 = """\
fn concat(a, b) {
  return a + b;
}

fn greet(name) {
  return concat("hello ", name);
}
"""

STRINGS_V2 = """\
fn concat(a, b) {
  return a + b;
}

fn greet(name) {
  return concat("hi ", name);
}

fn reverse(s, n) {
  out = "";
  for (i = n; i > 0; i = i - 1) {
    out = concat(out, at(s, i));
  }
  return out;
}
"""

PARSE_V1 = """\
fn parse_int(text) {
  value = 0;
  sign = 1;
  value = digits(text);
  return sign * value;
}
"""

PARSE_V2 = """\
fn parse_int(text) {
  value = 0;
  value = digits(text);
  return value;
}
"""

BROKEN = """\
fn oops(x) {
  if (x > 1) {
    return x;
"""

README_V1 = "# calc\n\nTiny arithmetic library.\n"
README_V2 = README_V1 + "\nSee src/util for string helpers.\n"
NOTES = "design notes\n============\n\nKeep functions small.\n"
LOGO = bytes(range(256)) * 4

# (author, day offset, message, {path: content or None to delete})
HISTORY = [
    ("alice", 0, "Initial calculator", {"src/calc.mini": CALC_V1, "README.md": README_V1}),
    ("bob", 30, "Clamp subtraction at zero", {"src/calc.mini": CALC_V2}),
    ("alice", 70, "Add string helpers",
     {"src/util/strings.mini": STRINGS_V1, "README.md": README_V2}),
    ("carol", 120, "Add multiplication", {"src/calc.mini": CALC_V3}),
    ("carol", 121, "Use repeated addition in mul", {"src/calc.mini": CALC_V4}),
    ("bob", 170, "Drop sub and document integer domain", {"src/calc.mini": CALC_V5}),
    ("alice", 215, "Add notes and logo", {"docs/notes.txt": NOTES, "assets/logo.bin": LOGO}),
    ("dave", 260, "Add reverse helper", {"src/util/strings.mini": STRINGS_V2}),
    ("bob", 300, "Route add through add2", {"src/calc.mini": CALC_V6}),
]
BRANCH_COMMIT = ("alice", 305, "Add integer parser", {"src/util/parse.mini": PARSE_V1})
MERGE = ("alice", 310, "Merge branch 'parser'")
TAIL = [
    ("carol", 350, "Simplify parse_int", {"src/util/parse.mini": PARSE_V2}),
    ("bob", 420, "Start error helpers", {"src/errors.mini": BROKEN, "docs/notes.txt": None}),
]
DEFECTIVE = {"Clamp subtraction at zero", "Use repeated addition in mul", "Add reverse helper",
             "Simplify parse_int"}


def _env(author: str, when: int) -> dict:
    name, email = PEOPLE[author][:-1].split(" <")
    env = dict(os.environ)
    for role in ("AUTHOR", "COMMITTER"):
        env[f"GIT_{role}_NAME"] = name
        env[f"GIT_{role}_EMAIL"] = email
        env[f"GIT_{role}_DATE"] = f"{when} +0000"
    env["GIT_CONFIG_NOSYSTEM"] = "1"
    env["GIT_CONFIG_GLOBAL"] = os.devnull
    return env


def _git(repo: Path, *args, env=None) -> str:
    cmd = ["git", "-c", "commit.gpgsign=false", "-c", "tag.gpgsign=false", *args]
    done = subprocess.run(cmd, cwd=repo, env=env or _env("alice", T0), check=True,
                          capture_output=True)
    return done.stdout.decode().strip()


def _apply(repo: Path, files: dict) -> None:
    for rel, content in files.items():
        path = repo / rel
        if content is None:
            _git(repo, "rm", "-q", rel)
            continue
        path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(content, bytes):
            path.write_bytes(content)
        else:
            path.write_text(content, encoding="utf-8")
        _git(repo, "add", rel)


def _commit(repo: Path, author: str, when: int, message: str, files: dict) -> str:
    _apply(repo, files)
    _git(repo, "commit", "-q", "-m", message, env=_env(author, when))
    return _git(repo, "rev-parse", "HEAD")


def _when(message: str) -> int:
    day = next(d for _, d, m, _ in HISTORY + TAIL if m == message)
    return T0 + day * DAY


def _fake_hash(label: str) -> str:
    return hashlib.sha1(label.encode()).hexdigest()


def _file_stats(before: dict, after: dict) -> dict:
    stats = {}
    for path in sorted(set(before) | set(after)):
        a, d = line_delta(before.get(path, ""), after.get(path, ""))
        if a or d:
            stats[path] = (a, d)
    return stats


def _inner(hash_, message, when, stats) -> InnerCommit:
    return InnerCommit(hash_, message, when, sum(a for a, _ in stats.values()),
                       sum(d for _, d in stats.values()), tuple(sorted(stats)), stats)


def build_fixture(out) -> dict:
    """Create the fixture under ``out``; returns the paths and commit hashes."""
    out = Path(out)
    repo = out / "repo"
    if repo.exists() and any(repo.iterdir()):
        raise FileExistsError(f"{repo} already exists and is not empty")
    repo.mkdir(parents=True, exist_ok=True)
    _git(repo, "init", "-q", "-b", "main")
    hashes = {}
    for author, day, message, files in HISTORY:
        hashes[message] = _commit(repo, author, T0 + day * DAY, message, files)
        if message == "Use repeated addition in mul":
            _git(repo, "tag", "v1.0", env=_env(author, T0 + day * DAY))

    # side branch merged without fast-forward; the walk only sees the merge
    _git(repo, "checkout", "-q", "-b", "parser", hashes["Add reverse helper"])
    author, day, message, files = BRANCH_COMMIT
    hashes[message] = _commit(repo, author, T0 + day * DAY, message, files)
    _git(repo, "checkout", "-q", "main")
    author, day, message = MERGE
    _git(repo, "merge", "-q", "--no-ff", "-m", message, "parser",
         env=_env(author, T0 + day * DAY))
    hashes[message] = _git(repo, "rev-parse", "HEAD")
    for author, day, message, files in TAIL:
        hashes[message] = _commit(repo, author, T0 + day * DAY, message, files)

    # PR 1: rebase-merged, inner commits kept their hashes
    c4, c5 = hashes["Add multiplication"], hashes["Use repeated addition in mul"]
    t4, t5 = _when("Add multiplication"), _when("Use repeated addition in mul")
    pr1 = PullRequestRecord(
        number=1,
        created_at=t4 - 2 * HOUR,
        merged_at=t5 + 6 * HOUR,
        merge_commit_hash=c5,
        inner_commits=(
            _inner(c4, "Add multiplication", t4,
                   _file_stats({"src/calc.mini": CALC_V2}, {"src/calc.mini": CALC_V3})),
            _inner(c5, "Use repeated addition in mul", t5,
                   _file_stats({"src/calc.mini": CALC_V3}, {"src/calc.mini": CALC_V4})),
        ),
        comments=(
            Comment(t4 + 3 * HOUR, "bob@example.org", reaction_count=3),
            Comment(t5 + 1 * HOUR, "alice@example.org", reaction_count=1),
        ),
        reviews=(
            ReviewEvent(t4 + 5 * HOUR, "bob@example.org", comment_count=2, state="commented"),
            ReviewEvent(t4 + 8 * HOUR, "dave@example.org", comment_count=1, state="approved"),
            ReviewEvent(t5 + 4 * HOUR, "bob@example.org", comment_count=0, state="approved"),
        ),
        review_requested_at=t4 - 1 * HOUR,
    )

    # PR 2: squash-merged; the surviving commit reuses the second inner message
    t8 = _when("Add reverse helper")
    step1 = STRINGS_V1.replace('"hello "', '"hi "')
    pr2 = PullRequestRecord(
        number=2,
        created_at=t8 - 3 * DAY,
        merged_at=t8 + 2 * HOUR,
        merge_commit_hash=hashes["Add reverse helper"],
        inner_commits=(
            _inner(_fake_hash("pr2-1"), "Shorter greeting", t8 - 3 * DAY,
                   {"src/util/strings.mini": line_delta(STRINGS_V1, step1),
                    "README.md": (2, 0)}),
            _inner(_fake_hash("pr2-2"), "Add reverse helper", t8 - 1 * DAY,
                   {"src/util/strings.mini": line_delta(step1, STRINGS_V2)}),
            _inner(_fake_hash("pr2-3"), "Address review comments", t8 - 6 * HOUR,
                   {"src/util/strings.mini": (1, 1)}),
        ),
        comments=(
            Comment(t8 - 2 * DAY, "carol@example.org", reaction_count=2),
        ),
        reviews=(
            ReviewEvent(t8 - 2 * DAY + HOUR, "alice@example.org", comment_count=1,
                        state="changes_requested"),
            ReviewEvent(t8 - 4 * HOUR, "alice@example.org", comment_count=0, state="approved"),
        ),
    )
    prs = out / "prs"
    for pr in (pr1, pr2):
        save_pr(pr, prs)

    labels = out / "labels.csv"
    first_parent = _git(repo, "rev-list", "--first-parent", "--reverse", "HEAD").split()
    by_hash = {h: m for m, h in hashes.items()}
    with open(labels, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# coverage=complete\ncommit_hash,label\n")
        for h in first_parent:
            if by_hash.get(h) in DEFECTIVE:
                fh.write(f"{h},1\n")
    return {"repo": repo, "prs": prs, "labels": labels, "hashes": hashes,
            "first_parent": first_parent}
