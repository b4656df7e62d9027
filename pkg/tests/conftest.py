import numpy as np
import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def record():
    """Append a one-line pass/fail verdict to the acceptance summary."""

    def _record(criterion, passed, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
