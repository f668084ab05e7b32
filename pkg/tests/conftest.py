"""Shared test plumbing: the acceptance-criterion log and its terminal summary."""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_LOG_KEY = pytest.StashKey[list]()


class AcceptanceLog:
    """Collects one entry per acceptance check and prints it as it happens."""

    def __init__(self, entries):
        self.entries = entries

    def check(self, criterion: int, name: str, passed: bool, detail: str = "") -> bool:
        passed = bool(passed)
        self.entries.append((criterion, name, passed, detail))
        status = "PASS" if passed else "FAIL"
        print(f"{status} criterion {criterion} [{name}] {detail}")
        return passed


def pytest_configure(config):
    config.stash[_LOG_KEY] = []


@pytest.fixture(scope="session")
def acceptance(pytestconfig):
    return AcceptanceLog(pytestconfig.stash[_LOG_KEY])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    entries = config.stash.get(_LOG_KEY, [])
    if not entries:
        return
    terminalreporter.section("acceptance criteria")
    by_criterion = {}
    for criterion, name, passed, detail in entries:
        by_criterion.setdefault(criterion, []).append((name, passed, detail))
    for criterion in sorted(by_criterion):
        checks = by_criterion[criterion]
        failed = [name for name, passed, _ in checks if not passed]
        status = "FAIL" if failed else "PASS"
        note = f"failed: {', '.join(failed)}" if failed else f"{len(checks)} checks"
        terminalreporter.write_line(f"{status} criterion {criterion}: {note}")
    terminalreporter.section("acceptance checks", sep="-")
    for criterion, name, passed, detail in entries:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{status} criterion {criterion} [{name}] {detail}")
