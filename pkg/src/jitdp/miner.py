"""Commit history mining on top of the ``git`` command line."""

from __future__ import annotations

import json
import logging
import subprocess
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from jitdp.syntax import language_for

log = logging.getLogger(__name__)

SNAPSHOT_CAP = 1 << 20
BINARY_PROBE = 8192
MAX_CHANGED_LINES = 10000
MAX_CHANGED_FILES = 100
EMPTY_TREE = "4b825dc642cb6eb9a060e54bf8d69288fbee4904"


class RepositoryError(RuntimeError):
    """The repository cannot be read at all."""


class CorruptObject(RuntimeError):
    pass


@dataclass(frozen=True)
class FileChange:
    path: str
    lines_added: int
    lines_deleted: int
    size_before: int
    before_text: Optional[str] = None
    after_text: Optional[str] = None
    language: str = "unknown"
    status: str = "M"


@dataclass(frozen=True)
class CommitRecord:
    hash: str
    parent_hashes: tuple
    author_id: str
    author_time: int
    message: str
    changes: tuple = ()
    is_release: bool = False

    @property
    def churn(self) -> int:
        return sum(c.lines_added + c.lines_deleted for c in self.changes)


@dataclass
class MiningReport:
    warnings: list = field(default_factory=list)
    commits_seen: int = 0
    outliers_removed: int = 0

    def warn(self, message: str) -> None:
        log.warning(message)
        self.warnings.append(message)


# -- text diff ---------------------------------------------------------------

def split_lines(text: str) -> list[str]:
    if not text:
        return []
    lines = text.split("\n")
    if text.endswith("\n"):
        lines.pop()
    return lines


def lcs_length(a: list, b: list) -> int:
    """Longest common subsequence length (Myers' O(ND) greedy search)."""
    lo = 0
    while lo < len(a) and lo < len(b) and a[lo] == b[lo]:
        lo += 1
    hi_a, hi_b = len(a), len(b)
    while hi_a > lo and hi_b > lo and a[hi_a - 1] == b[hi_b - 1]:
        hi_a -= 1
        hi_b -= 1
    common = lo + (len(a) - hi_a)
    a, b = a[lo:hi_a], b[lo:hi_b]
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        return common
    offset = n + m
    frontier = [0] * (2 * offset + 2)
    for d in range(n + m + 1):
        for k in range(-d, d + 1, 2):
            if k == -d or (k != d and frontier[offset + k - 1] < frontier[offset + k + 1]):
                x = frontier[offset + k + 1]
            else:
                x = frontier[offset + k - 1] + 1
            y = x - k
            while x < n and y < m and a[x] == b[y]:
                x += 1
                y += 1
            frontier[offset + k] = x
            if x >= n and y >= m:
                # d = n + m - 2 * lcs
                return common + (n + m - d) // 2
    raise AssertionError("unreachable")


def line_delta(before: str, after: str) -> tuple[int, int]:
    """(lines added, lines deleted) of a minimal line diff."""
    old, new = split_lines(before), split_lines(after)
    common = lcs_length(old, new)
    return len(new) - common, len(old) - common


def is_binary(data: bytes) -> bool:
    return b"\x00" in data[:BINARY_PROBE]


# -- git plumbing ------------------------------------------------------------

def _git(repo, *args, check=True) -> bytes:
    proc = subprocess.run(["git", "-C", str(repo), *args], capture_output=True)
    if check and proc.returncode != 0:
        raise subprocess.CalledProcessError(proc.returncode, args, proc.stdout, proc.stderr)
    return proc.stdout


class _BlobReader:
    """Persistent ``git cat-file --batch`` session."""

    def __init__(self, repo):
        self.proc = subprocess.Popen(
            ["git", "-C", str(repo), "cat-file", "--batch"],
            stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=subprocess.DEVNULL,
        )

    def read(self, sha: str) -> bytes:
        self.proc.stdin.write(sha.encode() + b"\n")
        self.proc.stdin.flush()
        header = self.proc.stdout.readline().split()
        if len(header) != 3:
            raise CorruptObject(f"object {sha} is missing")
        data = self.proc.stdout.read(int(header[2]))
        self.proc.stdout.read(1)
        return data

    def close(self):
        self.proc.stdin.close()
        self.proc.wait()


def _check_repo(repo) -> None:
    if not Path(repo).exists():
        raise RepositoryError(f"{repo}: no such directory")
    try:
        _git(repo, "rev-parse", "--git-dir")
    except subprocess.CalledProcessError as exc:
        raise RepositoryError(f"{repo}: not a readable repository") from exc


def _decode(data: bytes) -> str:
    return data.decode("utf-8", errors="replace")


def _raw_entries(repo, parent: Optional[str], commit: str, detect_renames: bool):
    args = ["diff-tree", "-r", "-z", "--raw", "--no-commit-id"]
    args.append("-M50%" if detect_renames else "--no-renames")
    args += [parent or EMPTY_TREE, commit]
    fields = _git(repo, *args).split(b"\x00")
    entries = []
    i = 0
    while i < len(fields) and fields[i]:
        meta = fields[i].decode().lstrip(":").split()
        old_mode, new_mode, old_sha, new_sha, status = meta
        if status[0] in "RC":
            old_path, new_path = fields[i + 1].decode(), fields[i + 2].decode()
            i += 3
        else:
            old_path = new_path = fields[i + 1].decode()
            i += 2
        if "160000" in (old_mode, new_mode):
            continue  # submodule pointer
        entries.append((status[0], old_sha, new_sha, old_path, new_path))
    return entries


def diff_commit(repo, commit: str, parent: Optional[str], *, detect_renames=False,
                snapshot_cap=SNAPSHOT_CAP, blobs: Optional[_BlobReader] = None) -> list[FileChange]:
    """Per-file changes of ``commit`` relative to ``parent`` (None = root commit)."""
    own_reader = blobs is None
    blobs = blobs or _BlobReader(repo)
    changes = []
    try:
        for status, old_sha, new_sha, old_path, new_path in _raw_entries(
            repo, parent, commit, detect_renames
        ):
            old = b"" if set(old_sha) == {"0"} else blobs.read(old_sha)
            new = b"" if set(new_sha) == {"0"} else blobs.read(new_sha)
            path = new_path if status != "D" else old_path
            if is_binary(old) or is_binary(new):
                changes.append(FileChange(path, 0, 0, 0, language="unknown", status=status))
                continue
            before, after = _decode(old), _decode(new)
            added, deleted = line_delta(before, after)
            keep = max(len(old), len(new)) <= snapshot_cap
            changes.append(
                FileChange(
                    path=path,
                    lines_added=added,
                    lines_deleted=deleted,
                    size_before=len(split_lines(before)),
                    before_text=before if keep and status != "A" else None,
                    after_text=after if keep and status != "D" else None,
                    language=language_for(path),
                    status=status,
                )
            )
    finally:
        if own_reader:
            blobs.close()
    return sorted(changes, key=lambda c: c.path)


def mark_releases(repo, report: Optional[MiningReport] = None) -> set[str]:
    """Hashes of all commits a tag resolves to (annotated chains are peeled)."""
    _check_repo(repo)
    refs = _decode(_git(repo, "for-each-ref", "--format=%(refname)", "refs/tags")).split()
    if not refs:
        return set()
    query = "".join(f"{ref}^{{commit}}\n" for ref in refs).encode()
    proc = subprocess.run(
        ["git", "-C", str(repo), "cat-file", "--batch-check"], input=query, capture_output=True
    )
    releases = set()
    for ref, line in zip(refs, _decode(proc.stdout).splitlines()):
        parts = line.split()
        if len(parts) == 3 and parts[1] == "commit":
            releases.add(parts[0])
        else:
            (report or MiningReport()).warn(f"dangling tag {ref} ignored")
    return releases


def walk_history(repo, since: Optional[int] = None, until: Optional[int] = None, *,
                 rev: str = "HEAD", skip_merges: bool = False, detect_renames: bool = False,
                 snapshot_cap: int = SNAPSHOT_CAP,
                 report: Optional[MiningReport] = None) -> list[CommitRecord]:
    """First-parent history of ``rev`` sorted by (author_time, hash).

    ``since``/``until`` bound author_time (inclusive, UTC seconds). Merge
    commits are diffed against their first parent.
    """
    _check_repo(repo)
    report = report or MiningReport()
    try:
        raw = _git(repo, "log", "--first-parent", "--format=%H%x1f%P%x1f%ae%x1f%at%x1f%B%x1e", rev)
    except subprocess.CalledProcessError as exc:
        if b"does not have any commits" in exc.stderr or b"unknown revision" in exc.stderr:
            return []
        raise RepositoryError(_decode(exc.stderr).strip()) from exc
    releases = mark_releases(repo, report)
    headers = []
    for chunk in _decode(raw).split("\x1e"):
        chunk = chunk.lstrip("\n")
        if not chunk:
            continue
        sha, parents, email, stamp, message = chunk.split("\x1f", 4)
        parents = tuple(parents.split())
        author_time = int(stamp)
        if since is not None and author_time < since:
            continue
        if until is not None and author_time > until:
            continue
        if skip_merges and len(parents) > 1:
            continue
        headers.append((author_time, sha, parents, email.strip().lower(), message.rstrip("\n")))
    headers.sort(key=lambda h: (h[0], h[1]))

    records = []
    blobs = _BlobReader(repo)
    try:
        for author_time, sha, parents, email, message in headers:
            report.commits_seen += 1
            try:
                changes = diff_commit(repo, sha, parents[0] if parents else None,
                                      detect_renames=detect_renames, snapshot_cap=snapshot_cap,
                                      blobs=blobs)
            except (subprocess.CalledProcessError, CorruptObject, ValueError) as exc:
                report.warn(f"skipping commit {sha}: {exc}")
                blobs.close()
                blobs = _BlobReader(repo)
                continue
            records.append(CommitRecord(sha, parents, email, author_time, message,
                                        tuple(changes), sha in releases))
    finally:
        blobs.close()
    return records


def filter_outliers(commits: Iterable[CommitRecord], *, max_lines: int = MAX_CHANGED_LINES,
                    max_files: int = MAX_CHANGED_FILES,
                    report: Optional[MiningReport] = None) -> list[CommitRecord]:
    """Drop commits changing more than ``max_lines`` lines or ``max_files`` files."""
    kept, removed = [], 0
    for commit in commits:
        if commit.churn > max_lines or len(commit.changes) > max_files:
            removed += 1
        else:
            kept.append(commit)
    if report is not None:
        report.outliers_removed += removed
    if removed:
        log.info("removed %d outlier commits", removed)
    return kept


def _record_to_dict(commit: CommitRecord) -> dict:
    data = asdict(commit)
    data["parent_hashes"] = list(commit.parent_hashes)
    data["changes"] = [asdict(change) for change in commit.changes]
    return data


def dump_commits(commits: Iterable[CommitRecord], fp) -> None:
    """Write one JSON object per commit (stable field order)."""
    for commit in commits:
        fp.write(json.dumps(_record_to_dict(commit), ensure_ascii=False) + "\n")


def load_commits(fp) -> list[CommitRecord]:
    records = []
    for line in fp:
        if not line.strip():
            continue
        data = json.loads(line)
        data["parent_hashes"] = tuple(data["parent_hashes"])
        data["changes"] = tuple(FileChange(**change) for change in data["changes"])
        records.append(CommitRecord(**data))
    return records
