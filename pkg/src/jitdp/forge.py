"""Pull-request metadata: records, on-disk cache, REST ingestion and commit mapping."""

from __future__ import annotations

import json
import logging
import os
import tempfile
import time
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path, PurePosixPath
from typing import Optional

log = logging.getLogger(__name__)

API_ROOT = "https://api.github.com"
PAGE_SIZE = 100
REVIEW_STATES = {"approved", "changes_requested", "commented"}


class FixtureError(ValueError):
    def __init__(self, path, field_name, message):
        super().__init__(f"{path}: field {field_name!r}: {message}")
        self.path = str(path)
        self.field = field_name


class RepositoryNotFound(RuntimeError):
    pass


def subsystem_of(path: str) -> str:
    parts = PurePosixPath(path).parts
    return parts[0] if len(parts) > 1 else "/"


def directory_of(path: str) -> str:
    parent = str(PurePosixPath(path).parent)
    return "/" if parent == "." else parent


@dataclass(frozen=True)
class InnerCommit:
    hash: str
    message: str
    author_time: int
    lines_added: int = 0
    lines_deleted: int = 0
    files: tuple = ()
    # optional per-file (added, deleted); evenly spread over ``files`` when absent
    file_stats: Optional[dict] = None

    @property
    def subsystems(self) -> frozenset:
        return frozenset(subsystem_of(p) for p in self.files)

    @property
    def directories(self) -> frozenset:
        return frozenset(directory_of(p) for p in self.files)

    def per_file_lines(self) -> dict[str, float]:
        if self.file_stats:
            return {path: float(a + d) for path, (a, d) in self.file_stats.items()}
        if not self.files:
            return {}
        share = (self.lines_added + self.lines_deleted) / len(self.files)
        return {path: share for path in self.files}


@dataclass(frozen=True)
class Comment:
    created_at: int
    author_id: str
    reaction_count: int = 0


@dataclass(frozen=True)
class ReviewEvent:
    submitted_at: int
    reviewer_id: str
    comment_count: int = 0
    state: str = "commented"


@dataclass(frozen=True)
class PullRequestRecord:
    number: int
    created_at: int
    merged_at: Optional[int] = None
    merge_commit_hash: Optional[str] = None
    inner_commits: tuple = ()
    comments: tuple = ()
    reviews: tuple = ()
    review_requested_at: Optional[int] = None

    @property
    def review_requested(self) -> int:
        return self.created_at if self.review_requested_at is None else self.review_requested_at


# -- serialization -------------------------------------------------------------

def pr_to_dict(pr: PullRequestRecord) -> dict:
    return {
        "number": pr.number,
        "created_at": pr.created_at,
        "merged_at": pr.merged_at,
        "merge_commit_hash": pr.merge_commit_hash,
        "review_requested_at": pr.review_requested_at,
        "inner_commits": [
            {
                "hash": c.hash,
                "message": c.message,
                "author_time": c.author_time,
                "lines_added": c.lines_added,
                "lines_deleted": c.lines_deleted,
                "files": list(c.files),
                **({"file_stats": {p: list(v) for p, v in sorted(c.file_stats.items())}}
                   if c.file_stats else {}),
            }
            for c in pr.inner_commits
        ],
        "comments": [
            {"created_at": c.created_at, "author_id": c.author_id,
             "reaction_count": c.reaction_count}
            for c in pr.comments
        ],
        "reviews": [
            {"submitted_at": r.submitted_at, "reviewer_id": r.reviewer_id,
             "comment_count": r.comment_count, "state": r.state}
            for r in pr.reviews
        ],
    }


def _require(data, key, kinds, path, prefix="", optional=False):
    name = prefix + key
    if key not in data or data[key] is None:
        if optional:
            return None
        raise FixtureError(path, name, "missing")
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, kinds):
        raise FixtureError(path, name, f"expected {kinds}, got {type(value).__name__}")
    return value


def _count(data, key, path, prefix):
    value = _require(data, key, int, path, prefix, optional=True) or 0
    if value < 0:
        raise FixtureError(path, prefix + key, "must be >= 0")
    return value


def pr_from_dict(data: dict, path="<memory>") -> PullRequestRecord:
    """Validate and build a record; errors name the offending field."""
    if not isinstance(data, dict):
        raise FixtureError(path, "<root>", "expected an object")
    number = _require(data, "number", int, path)
    created = _require(data, "created_at", (int, float), path)
    merged = _require(data, "merged_at", (int, float), path, optional=True)
    if merged is not None and merged < created:
        raise FixtureError(path, "merged_at",
                           f"merged_at ({merged}) precedes created_at ({created})")
    inner = []
    for i, item in enumerate(_require(data, "inner_commits", list, path, optional=True) or []):
        prefix = f"inner_commits[{i}]."
        files = _require(item, "files", list, path, prefix, optional=True) or []
        stats = _require(item, "file_stats", dict, path, prefix, optional=True)
        inner.append(InnerCommit(
            hash=_require(item, "hash", str, path, prefix),
            message=_require(item, "message", str, path, prefix),
            author_time=_require(item, "author_time", (int, float), path, prefix),
            lines_added=_count(item, "lines_added", path, prefix),
            lines_deleted=_count(item, "lines_deleted", path, prefix),
            files=tuple(files),
            file_stats={p: tuple(v) for p, v in stats.items()} if stats else None,
        ))
    inner.sort(key=lambda c: c.author_time)
    comments = []
    for i, item in enumerate(_require(data, "comments", list, path, optional=True) or []):
        prefix = f"comments[{i}]."
        comments.append(Comment(
            created_at=_require(item, "created_at", (int, float), path, prefix),
            author_id=_require(item, "author_id", str, path, prefix),
            reaction_count=_count(item, "reaction_count", path, prefix),
        ))
    reviews = []
    for i, item in enumerate(_require(data, "reviews", list, path, optional=True) or []):
        prefix = f"reviews[{i}]."
        state = _require(item, "state", str, path, prefix, optional=True) or "commented"
        if state not in REVIEW_STATES:
            raise FixtureError(path, prefix + "state", f"unknown review state {state!r}")
        reviews.append(ReviewEvent(
            submitted_at=_require(item, "submitted_at", (int, float), path, prefix),
            reviewer_id=_require(item, "reviewer_id", str, path, prefix),
            comment_count=_count(item, "comment_count", path, prefix),
            state=state,
        ))
    return PullRequestRecord(
        number=number,
        created_at=created,
        merged_at=merged,
        merge_commit_hash=_require(data, "merge_commit_hash", str, path, optional=True),
        inner_commits=tuple(inner),
        comments=tuple(comments),
        reviews=tuple(reviews),
        review_requested_at=_require(data, "review_requested_at", (int, float), path,
                                     optional=True),
    )


def write_json_atomic(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def save_pr(pr: PullRequestRecord, directory) -> Path:
    path = Path(directory) / f"pr-{pr.number}.json"
    write_json_atomic(path, pr_to_dict(pr))
    return path


def load_fixtures(directory) -> list[PullRequestRecord]:
    """Load every ``pr-*.json`` file in ``directory``, sorted by PR number."""
    records = []
    for path in sorted(Path(directory).glob("pr-*.json")):
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise FixtureError(path, "<root>", f"invalid JSON: {exc}") from None
        records.append(pr_from_dict(data, path))
    return sorted(records, key=lambda pr: pr.number)


# -- REST ingestion ----------------------------------------------------------------

def _timestamp(value: Optional[str]) -> Optional[int]:
    if not value:
        return None
    return int(datetime.fromisoformat(value.replace("Z", "+00:00"))
               .astimezone(timezone.utc).timestamp())


def _next_link(header: Optional[str]) -> Optional[str]:
    if not header:
        return None
    for part in header.split(","):
        url, _, rel = part.partition(";")
        if 'rel="next"' in rel:
            return url.strip().strip("<>")
    return None


class ForgeClient:
    """Paginated, cached reader for v3-style pull-request endpoints.

    ``session`` needs a ``get(url, params=..., headers=...)`` method returning
    an object with ``status_code``, ``headers`` and ``json()`` (for example
    :class:`requests.Session`).
    """

    def __init__(self, repo_id: str, cache_dir, *, token: Optional[str] = None, session=None,
                 api_root: str = API_ROOT, max_workers: int = 4, max_retries: int = 6,
                 sleep=time.sleep):
        if session is None:
            import requests

            session = requests.Session()
        self.repo_id = repo_id
        self.cache_dir = Path(cache_dir)
        self.token = token if token is not None else os.environ.get("FORGE_TOKEN")
        self.session = session
        self.api_root = api_root.rstrip("/")
        self.max_workers = max_workers
        self.max_retries = max_retries
        self.sleep = sleep
        self.requests_made = Counter()

    def _headers(self) -> dict:
        headers = {"Accept": "application/vnd.github+json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        return headers

    def _get(self, url: str, params=None, kind="detail"):
        delay = 1.0
        for _ in range(self.max_retries + 1):
            self.requests_made[kind] += 1
            response = self.session.get(url, params=params, headers=self._headers())
            if response.status_code == 404:
                raise RepositoryNotFound(f"repository not found: {self.repo_id}")
            if response.status_code in (403, 429):
                log.warning("rate limited on %s; retrying in %.0fs", url, delay)
                self.sleep(delay)
                delay *= 2
                continue
            if response.status_code >= 400:
                raise RuntimeError(f"GET {url} failed with HTTP {response.status_code}")
            return response
        raise RuntimeError(f"GET {url}: rate limit persisted after {self.max_retries} retries")

    def _paginate(self, path: str, params=None, kind="detail") -> list:
        url = f"{self.api_root}/repos/{self.repo_id}{path}"
        params = dict(params or {}, per_page=PAGE_SIZE)
        page = 1
        items = []
        while url:
            response = self._get(url, params=dict(params, page=page), kind=kind)
            try:
                batch = response.json()
                if not isinstance(batch, list):
                    raise ValueError("expected a JSON array")
            except ValueError as exc:
                log.warning("skipping malformed page %d of %s: %s", page, path, exc)
                batch = None
            if batch:
                items.extend(batch)
            link = _next_link(response.headers.get("Link") if response.headers else None)
            if link is None and (batch is None or len(batch) < PAGE_SIZE):
                break
            page += 1
        return items

    def _manifest_path(self) -> Path:
        return self.cache_dir / "index.json"

    def fetch_pull_requests(self, refresh: bool = False) -> list[PullRequestRecord]:
        """All merged pull requests; served from the cache once it is complete."""
        manifest = self._manifest_path()
        if manifest.exists() and not refresh:
            return load_fixtures(self.cache_dir)
        listing = self._paginate("/pulls", {"state": "closed"}, kind="list")
        merged = [item for item in listing if isinstance(item, dict) and item.get("merged_at")]
        todo = []
        for item in merged:
            cached = self.cache_dir / f"pr-{item['number']}.json"
            if cached.exists() and not refresh:
                continue
            todo.append(item)
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            for pr in pool.map(self._fetch_one, todo):
                save_pr(pr, self.cache_dir)
        write_json_atomic(manifest, {"repo": self.repo_id,
                                     "numbers": sorted(item["number"] for item in merged)})
        return load_fixtures(self.cache_dir)

    def _fetch_one(self, item: dict) -> PullRequestRecord:
        number = item["number"]
        commits = []
        for raw in self._paginate(f"/pulls/{number}/commits"):
            sha = raw["sha"]
            detail = self._get(f"{self.api_root}/repos/{self.repo_id}/commits/{sha}").json()
            files = detail.get("files") or []
            stats = detail.get("stats") or {}
            commits.append(InnerCommit(
                hash=sha,
                message=raw["commit"]["message"],
                author_time=_timestamp(raw["commit"]["author"]["date"]),
                lines_added=int(stats.get("additions", 0)),
                lines_deleted=int(stats.get("deletions", 0)),
                files=tuple(f["filename"] for f in files),
                file_stats={f["filename"]: (int(f.get("additions", 0)), int(f.get("deletions", 0)))
                            for f in files} or None,
            ))
        review_comments = self._paginate(f"/pulls/{number}/comments")
        per_review = Counter(c.get("pull_request_review_id") for c in review_comments)
        reviews = []
        for raw in self._paginate(f"/pulls/{number}/reviews"):
            state = str(raw.get("state", "commented")).lower()
            if state not in REVIEW_STATES or not raw.get("submitted_at"):
                continue
            reviews.append(ReviewEvent(
                submitted_at=_timestamp(raw["submitted_at"]),
                reviewer_id=(raw.get("user") or {}).get("login", ""),
                comment_count=per_review.get(raw.get("id"), 0),
                state=state,
            ))
        comments = [
            Comment(
                created_at=_timestamp(raw["created_at"]),
                author_id=(raw.get("user") or {}).get("login", ""),
                reaction_count=int((raw.get("reactions") or {}).get("total_count", 0)),
            )
            for raw in self._paginate(f"/issues/{number}/comments")
        ]
        return PullRequestRecord(
            number=number,
            created_at=_timestamp(item["created_at"]),
            merged_at=_timestamp(item.get("merged_at")),
            merge_commit_hash=item.get("merge_commit_sha"),
            inner_commits=tuple(sorted(commits, key=lambda c: c.author_time)),
            comments=tuple(sorted(comments, key=lambda c: c.created_at)),
            reviews=tuple(sorted(reviews, key=lambda r: r.submitted_at)),
            review_requested_at=None,
        )


def fetch_pull_requests(repo_id: str, auth: Optional[str] = None, *, cache_dir,
                        session=None, **kwargs) -> list[PullRequestRecord]:
    return ForgeClient(repo_id, cache_dir, token=auth, session=session,
                       **kwargs).fetch_pull_requests()


# -- commit mapping ------------------------------------------------------------------

def normalize_message(message: str) -> str:
    return message.replace("\r\n", "\n").replace("\r", "\n").strip()


@dataclass(frozen=True)
class PRMatch:
    pr: PullRequestRecord
    inner: InnerCommit
    position: int  # 1-based
    via: str


@dataclass
class PRIndex:
    by_hash: dict = field(default_factory=dict)
    by_message: dict = field(default_factory=dict)

    @classmethod
    def build(cls, prs) -> "PRIndex":
        index = cls()
        messages = defaultdict(list)
        for pr in prs:
            for pos, inner in enumerate(pr.inner_commits, start=1):
                index.by_hash.setdefault(inner.hash, (pr, inner, pos))
                message = normalize_message(inner.message)
                if message:
                    messages[message].append((pr, inner, pos))
        index.by_message = dict(messages)
        return index


def map_commit_to_pr(commit, index: PRIndex, stats: Optional[Counter] = None) -> Optional[PRMatch]:
    """Locate the inner commit representing ``commit``: hash first, then message.

    A message match needs the normalized message to occur exactly once, in a
    single PR. Pass a :class:`collections.Counter` as ``stats`` to count
    outcomes (``hash``, ``message``, ``ambiguous``, ``unmatched``).
    """
    stats = stats if stats is not None else Counter()
    hit = index.by_hash.get(commit.hash)
    if hit is not None:
        stats["hash"] += 1
        return PRMatch(*hit, via="hash")
    candidates = index.by_message.get(normalize_message(commit.message), [])
    if candidates:
        numbers = {pr.number for pr, _, _ in candidates}
        if len(numbers) > 1:
            stats["ambiguous"] += 1
            return None
        if len(candidates) == 1:
            stats["message"] += 1
            return PRMatch(*candidates[0], via="message")
    stats["unmatched"] += 1
    return None
