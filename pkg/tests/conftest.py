import random

import pytest

from carnot.lie_core import PRESETS, parse_preset


@pytest.fixture(params=PRESETS)
def preset(request):
    return parse_preset(request.param)


@pytest.fixture
def rng():
    return random.Random(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
