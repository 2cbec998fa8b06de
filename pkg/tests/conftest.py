import numpy as np
import pytest
from hypothesis import settings

from gmla.grid import make_grid

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

CORPUS = ["gauss(0,0)", "gauss(1,-2)", "hermite(1)", "hermite(3)", "hermite(6)",
          "planewave(5)", "delta", "chirp(2)", "planewave(5)+delta"]
SINGULAR = ["planewave(5)", "delta", "chirp(2)"]


@pytest.fixture(scope="session")
def grid():
    return make_grid(L=16.0, N=256)


@pytest.fixture(scope="session")
def small_grid():
    return make_grid(L=8.0, N=64)


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


# acceptance criteria register one line each here; printed after the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
