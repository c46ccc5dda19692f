import os
import subprocess
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

GOLDEN = Path(__file__).parent / "golden"


class RepoPath(type(Path())):
    """A repository path that also carries ``git`` and ``commit`` helpers."""


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    from jitdp.fixture import build_fixture

    out = tmp_path_factory.mktemp("fixture")
    info = build_fixture(out)
    info["out"] = out
    return info


@pytest.fixture
def git_repo(tmp_path):
    """Empty repository plus a ``commit(files, when, author)`` helper."""
    repo = RepoPath(tmp_path / "repo")
    repo.mkdir()
    env = dict(os.environ, GIT_CONFIG_NOSYSTEM="1", GIT_CONFIG_GLOBAL=os.devnull)

    def git(*args, when=1_600_000_000, author="dev@example.org"):
        e = dict(env, GIT_AUTHOR_NAME="Dev", GIT_AUTHOR_EMAIL=author,
                 GIT_COMMITTER_NAME="Dev", GIT_COMMITTER_EMAIL=author,
                 GIT_AUTHOR_DATE=f"{when} +0000", GIT_COMMITTER_DATE=f"{when} +0000")
        done = subprocess.run(["git", "-c", "commit.gpgsign=false", "-c", "tag.gpgsign=false",
                               *args], cwd=repo, env=e, check=True, capture_output=True)
        return done.stdout.decode().strip()

    def commit(files, when=1_600_000_000, author="dev@example.org", message="change"):
        for rel, content in files.items():
            path = repo / rel
            if content is None:
                git("rm", "-q", rel)
                continue
            path.parent.mkdir(parents=True, exist_ok=True)
            if isinstance(content, bytes):
                path.write_bytes(content)
            else:
                path.write_text(content)
            git("add", rel)
        git("commit", "-q", "--allow-empty", "-m", message, when=when, author=author)
        return git("rev-parse", "HEAD")

    git("init", "-q", "-b", "main")
    repo.git = git
    repo.commit = commit
    return repo


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
