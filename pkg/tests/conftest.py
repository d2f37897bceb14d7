import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from holonomylab import catalog  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def entry():
    return catalog.get


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
