import sys

import numpy as np
import pytest

from sdflow.config import random_field
from sdflow.spectral import Grid


def smooth_field(grid, amplitude=0.2, seed=0, kmax=3, even=False):
    """Band-limited random field with sup norm ``amplitude``."""
    return random_field(grid, amplitude, seed, kmax, even=even)


@pytest.fixture
def grid64():
    return Grid(2 * np.pi, 1.5, 64, 64)


@pytest.fixture
def grid32():
    return Grid(2 * np.pi, 1.5, 32, 32)


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance criteria results, one line each, in criterion order."""
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        terminalreporter.write_line(results[num])
