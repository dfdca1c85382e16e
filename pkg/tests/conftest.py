import numpy as np
import pytest
from hypothesis import settings

from quantlearn.core import LabeledDataset

settings.register_profile("fixed", derandomize=True, deadline=None, max_examples=60)
settings.load_profile("fixed")


@pytest.fixture
def two_point():
    return LabeledDataset(np.array([[0.0, 1.0], [0.0, -1.0]]), np.array([1, -1]), "two-point")


@pytest.fixture
def xor():
    X = np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]]) * 0.5
    return LabeledDataset(X, np.array([1, 1, -1, -1]), "xor")


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
