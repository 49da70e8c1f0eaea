from __future__ import annotations

import shutil
import subprocess
from pathlib import Path

import pytest

SCRIPT = Path(__file__).resolve().parents[1] / "scripts" / "toggle-precommit.sh"

pytestmark = pytest.mark.skipif(shutil.which("bash") is None or shutil.which("git") is None, reason="needs bash and git")


@pytest.fixture()
def repo(tmp_path: Path) -> Path:
    subprocess.run(["git", "init", "-q", str(tmp_path)], check=True)
    return tmp_path


def _toggle(repo: Path, *args: str) -> subprocess.CompletedProcess[str]:
    return subprocess.run(["bash", str(SCRIPT), *args], cwd=repo, capture_output=True, text=True)


def test_missing_hooks_point_at_install(repo):
    result = _toggle(repo, "status")
    assert result.returncode == 1
    assert "uv run pre-commit install" in result.stdout


def test_hooks_switch_off_and_on(repo):
    hook = repo / ".git" / "hooks" / "pre-commit"
    hook.parent.mkdir(parents=True, exist_ok=True)
    hook.write_text("#!/bin/sh\n", encoding="utf-8")

    assert "hooks are on" in _toggle(repo, "status").stdout
    assert _toggle(repo, "off").returncode == 0
    assert not hook.exists()
    assert hook.with_name("pre-commit.disabled").exists()
    assert "already off" in _toggle(repo, "off").stdout
    # no argument flips the state
    assert "enabled" in _toggle(repo).stdout
    assert hook.exists()


def test_unknown_argument(repo):
    hook = repo / ".git" / "hooks" / "pre-commit"
    hook.parent.mkdir(parents=True, exist_ok=True)
    hook.write_text("#!/bin/sh\n", encoding="utf-8")
    result = _toggle(repo, "sideways")
    assert result.returncode == 2
    assert "usage" in result.stderr
