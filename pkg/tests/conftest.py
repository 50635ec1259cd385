import numpy as np
import pytest

from twojack.datasets import load_builtin

ACCEPTANCE_LINES = []


@pytest.fixture
def gravity():
    return load_builtin("gravity").data


@pytest.fixture
def child():
    return load_builtin("child-girls-first").data


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
