import time
from contextlib import contextmanager

import pytest

_RESULTS: dict[int, tuple[str, str, float]] = {}


@contextmanager
def _criterion(number: int, title: str, budget: float):
    """Record PASS/FAIL for one acceptance criterion; wall time counts toward the verdict."""
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        _RESULTS[number] = ("FAIL", title, time.perf_counter() - start)
        raise
    elapsed = time.perf_counter() - start
    if elapsed >= budget:
        _RESULTS[number] = ("FAIL", f"{title} (over budget {budget:g} s)", elapsed)
        raise AssertionError(f"criterion {number} took {elapsed:.2f} s, budget {budget:g} s")
    _RESULTS[number] = ("PASS", title, elapsed)


@pytest.fixture
def criterion():
    return _criterion


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        verdict, title, elapsed = _RESULTS[number]
        terminalreporter.write_line(f"[{verdict}] criterion {number:2d}: {title} ({elapsed:.2f} s)")
