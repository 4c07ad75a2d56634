import time

import pytest

_LINES: list[str] = []


class Criterion:
    """Times one acceptance criterion and records a single pass/fail line."""

    def __init__(self, number: int, title: str, limit: float):
        self.number, self.title, self.limit = number, title, limit
        self.details: list[str] = []
        self.failures: list[str] = []

    def check(self, ok: bool, what: str) -> None:
        self.details.append(what)
        if not ok:
            self.failures.append(what)

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        self.check(elapsed < self.limit, f"runtime {elapsed:.1f}s < {self.limit:.0f}s")
        if exc_type is not None:
            self.failures.append(f"{exc_type.__name__}: {exc}")
        status = "PASS" if not self.failures else "FAIL"
        shown = self.failures if self.failures else self.details
        line = f"[{status}] criterion {self.number:2d} {self.title}: " + "; ".join(shown)
        _LINES.append(line)
        print(line)
        if exc_type is None and self.failures:
            raise AssertionError(line)
        return False


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split("criterion")[1].split()[0])):
            terminalreporter.write_line(line)
