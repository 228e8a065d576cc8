import numpy as np
import pytest

from weakcurv.fields import Grid2D, ScalarField2D

# int over R^2 of the unit-radius bump exp(-1/(1-|x|^2)); adaptive quadrature
BUMP_MASS = 0.46651239317833004


def square(n, half=2.0):
    return Grid2D.square(-half, half, n)


def sampled(f, grid):
    X, Y = grid.mesh()
    v = ScalarField2D(grid, np.broadcast_to(f.value(X, Y), grid.shape))
    p, q = f.grad(X, Y)
    return v, (np.broadcast_to(p, grid.shape) + 0.0, np.broadcast_to(q, grid.shape) + 0.0)


def order_of(hs, errs):
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])


@pytest.fixture
def grid257():
    return square(257)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
