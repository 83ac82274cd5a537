import numpy as np
import pytest

_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def criterion(request):
    """Record ``(passed, detail)`` for one acceptance criterion and print its status line."""
    def record(key: str, passed: bool, detail: str):
        _ACCEPTANCE[key] = (bool(passed), detail)
        print(f"[{'PASS' if passed else 'FAIL'}] criterion {key}: {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: (int(k.rstrip("ab")), k)):
        passed, detail = _ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {key}: {detail}")
