import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("qnl", max_examples=40, deadline=None)
settings.load_profile("qnl")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
