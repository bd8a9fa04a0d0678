"""Central finite differences on scalar fields ``u(x, t)``."""

from __future__ import annotations

import math

import numpy as np

DEFAULT_H = 1e-4


class FDError(ArithmeticError):
    def __init__(self, message: str, axis: str, x, t):
        super().__init__(f"{message} along {axis} at x={list(map(float, x))}, t={t}")
        self.axis = axis
        self.x = x
        self.t = t


def _shift(x, i: int, d: float) -> np.ndarray:
    y = np.array(x, dtype=float)
    y[i] += d
    return y


def _checked(value: float, axis: str, x, t) -> float:
    if not math.isfinite(value):
        raise FDError("non-finite stencil value", axis, x, t)
    return value


def fd_gradient(field, p, h: float = DEFAULT_H) -> np.ndarray:
    x, t = p
    out = np.empty(len(x))
    for i in range(len(x)):
        axis = f"x{i + 1}"
        fp = field(_shift(x, i, h), t)
        fm = field(_shift(x, i, -h), t)
        out[i] = _checked((fp - fm) / (2.0 * h), axis, x, t)
    return out


def fd_time_derivative(field, p, h: float = DEFAULT_H) -> float:
    x, t = p
    return _checked((field(x, t + h) - field(x, t - h)) / (2.0 * h), "t", x, t)


def fd_laplacian(field, p, h: float = DEFAULT_H) -> float:
    x, t = p
    f0 = field(np.asarray(x, dtype=float), t)
    total = 0.0
    for i in range(len(x)):
        fp = field(_shift(x, i, h), t)
        fm = field(_shift(x, i, -h), t)
        total += _checked(((fp - f0) - (f0 - fm)) / (h * h), f"x{i + 1}", x, t)
    return total
