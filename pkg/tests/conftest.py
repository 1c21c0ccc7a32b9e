import numpy as np
import pytest

from halfwsne import BimatrixGame


@pytest.fixture
def pennies():
    return BimatrixGame(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([[0.0, 1.0], [1.0, 0.0]]))


@pytest.fixture
def lopsided():
    # row value 32/55 via x=(6/11, 5/11), y=(4/11, 7/11); column game has value 1/2
    return BimatrixGame(np.array([[0.9, 0.4], [0.2, 0.8]]), np.array([[0.6, 0.4], [0.4, 0.6]]))


@pytest.fixture
def ones():
    return BimatrixGame(np.ones((3, 3)), np.ones((3, 3)))



def pytest_terminal_summary(terminalreporter):
    import sys

    lines = []
    for mod in list(sys.modules.values()):
        if getattr(mod, "__name__", "").endswith("test_acceptance"):
            lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
