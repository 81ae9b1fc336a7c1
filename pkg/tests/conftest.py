import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hyrrt.input_library import build_library  # noqa: E402
from hyrrt.system_model import bouncing_ball, get_problem  # noqa: E402

ACCEPTANCE_LINES: dict = {}


@pytest.fixture(scope="session")
def ball():
    return bouncing_ball()


@pytest.fixture(scope="session")
def problem():
    return get_problem("bouncing-ball")


@pytest.fixture(scope="session")
def library():
    return build_library(0.1, (0.0, 5.0), (0.0, 5.0))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
