import numpy as np
import pytest

from ripsense.ensembles import Stream

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    """Independent numpy generator for test inputs (not the library stream)."""
    return np.random.default_rng(20240611)


@pytest.fixture
def stream():
    return Stream(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
