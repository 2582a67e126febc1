"""Collects acceptance results and prints one pass/fail line per criterion."""
import re

import pytest

_KEY = pytest.StashKey[dict]()


class Criterion:
    """Named checks for one part of an acceptance criterion."""

    def __init__(self, store: dict, number: int, part: str):
        self.number, self.part, self.checks = number, part, []
        self._store = store
        store.setdefault(number, {})[part] = self

    def check(self, name: str, passed, value=None) -> bool:
        self.checks.append((name, bool(passed), value))
        return bool(passed)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(p for _, p, _ in self.checks)

    def describe(self) -> str:
        failed = [f"{n}={v}" for n, p, v in self.checks if not p]
        if not self.checks:
            return f"{self.part}: did not complete"
        return f"{self.part}: " + ("ok" if not failed else "failed " + ", ".join(failed))

    def verify(self) -> None:
        bad = [(n, v) for n, p, v in self.checks if not p]
        assert not bad, f"criterion {self.number} ({self.part}) failed: {bad}"


@pytest.fixture
def criterion(request):
    store = request.config.stash.setdefault(_KEY, {})
    return lambda number, part: Criterion(store, number, part)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_KEY, None)
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        parts = store[number].values()
        ok = all(p.passed for p in parts)
        detail = "; ".join(p.describe() for p in parts)
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  ({detail})"
        terminalreporter.write_line(re.sub(r"\s+", " ", line))
