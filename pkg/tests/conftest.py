import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from harmored.model import ScalarField  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


def heat_kernel_1d(alpha=1.0):
    def value(x, t):
        return (4 * math.pi * t / alpha) ** -0.5 * math.exp(-alpha * x[0] ** 2 / (4 * t))

    return value


def heat_kernel_derivatives_1d(x, t, alpha=1.0):
    """Closed-form (u, u_x, u_xx, u_t) of the 1D kernel."""
    u = heat_kernel_1d(alpha)([x], t)
    ux = -alpha * x / (2 * t) * u
    uxx = (alpha**2 * x**2 / (4 * t**2) - alpha / (2 * t)) * u
    ut = (-1 / (2 * t) + alpha * x**2 / (4 * t**2)) * u
    return u, ux, uxx, ut


@pytest.fixture
def kernel_field():
    return ScalarField(heat_kernel_1d(1.0), label="heat_kernel_1d")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
