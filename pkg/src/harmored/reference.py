"""Explicit FTCS solver for  lap u = alpha u_t  on a 1D/2D box with zero
Dirichlet boundaries; an independent oracle for candidate solutions."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np


class StabilityError(ValueError):
    pass


@dataclass(frozen=True)
class TimeSlab:
    axes: tuple[np.ndarray, ...]
    dx: tuple[float, ...]
    dt: float
    alpha: float
    times: np.ndarray
    values: np.ndarray  # shape (levels, *counts)

    @property
    def n(self) -> int:
        return len(self.axes)

    def level(self, t: float) -> int:
        if t < self.times[0] - self.dt / 2 or t > self.times[-1] + self.dt / 2:
            raise ValueError(f"t={t} outside slab range [{self.times[0]}, {self.times[-1]}]")
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > self.dt / 2 + 1e-15:
            raise ValueError(f"t={t} is not within dt/2 of a computed level")
        return i

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes, indexing="ij")


def stable_dt(dx, alpha: float) -> float:
    """Largest stable explicit step, dt <= 1/(2 D sum(1/dx^2)), D = 1/alpha."""
    D = 1.0 / alpha
    return 1.0 / (2.0 * D * sum(1.0 / d**2 for d in dx))


def _sample(init, axes, t0):
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = np.stack([m.ravel() for m in mesh], axis=1)
    vals = np.array([init(x, t0) for x in flat], dtype=float)
    return vals.reshape(mesh[0].shape)


def solve_heat(init, alpha: float, box, counts, t0: float, t1: float, dt: float, boundary: str = "dirichletZero") -> TimeSlab:
    if boundary != "dirichletZero":
        raise ValueError(f"unsupported boundary {boundary!r}")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if not (t1 > t0 >= 0):
        raise ValueError("need t1 > t0 >= 0")
    n = len(box)
    if n not in (1, 2) or len(counts) != n:
        raise ValueError("reference solver supports 1D and 2D boxes only")
    axes = tuple(np.linspace(a, b, c) for (a, b), c in zip(box, counts))
    dx = tuple(float(ax[1] - ax[0]) for ax in axes)
    limit = stable_dt(dx, alpha)
    if dt > limit * (1 + 1e-12):
        raise StabilityError(f"dt={dt} violates the explicit stability bound {limit}")
    steps = max(1, math.ceil((t1 - t0) / dt - 1e-9))
    step = (t1 - t0) / steps
    D = 1.0 / alpha

    u = _sample(init, axes, t0)
    u = _zero_boundary(u)
    levels = np.empty((steps + 1,) + u.shape)
    levels[0] = u
    for k in range(steps):
        lap = np.zeros_like(u)
        inner = tuple(slice(1, -1) for _ in range(n))
        for axis in range(n):
            fwd = list(inner)
            bwd = list(inner)
            fwd[axis] = slice(2, None)
            bwd[axis] = slice(None, -2)
            lap[inner] += (u[tuple(fwd)] - 2.0 * u[inner] + u[tuple(bwd)]) / dx[axis] ** 2
        u = u + step * D * lap
        u = _zero_boundary(u)
        levels[k + 1] = u
    times = t0 + step * np.arange(steps + 1)
    times[-1] = t1
    return TimeSlab(axes, dx, step, float(alpha), times, levels)


def _zero_boundary(u: np.ndarray) -> np.ndarray:
    u = u.copy()
    for axis in range(u.ndim):
        idx = [slice(None)] * u.ndim
        idx[axis] = 0
        u[tuple(idx)] = 0.0
        idx[axis] = -1
        u[tuple(idx)] = 0.0
    return u


def compare(slab: TimeSlab, field, t: float) -> dict:
    """maxAbs and trapezoid-weighted L2 (cell units) of slab - field at ``t``."""
    i = slab.level(t)
    tt = float(slab.times[i])
    ref = _sample(field, slab.axes, tt)
    diff = slab.values[i] - ref
    w = np.ones_like(diff)
    for axis in range(diff.ndim):
        idx = [slice(None)] * diff.ndim
        idx[axis] = 0
        w[tuple(idx)] *= 0.5
        idx[axis] = -1
        w[tuple(idx)] *= 0.5
    return {"t": tt, "maxAbs": float(np.max(np.abs(diff))), "L2": float(np.sqrt(np.sum(w * diff * diff)))}


def export_csv(slab: TimeSlab, path, times=None) -> None:
    """Columns x1[,x2],t,u; one row per node and exported level."""
    levels = range(len(slab.times)) if times is None else [slab.level(t) for t in times]
    mesh = slab.mesh()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(slab.n)] + ["t", "u"])
        for k in levels:
            t = float(slab.times[k])
            for idx in np.ndindex(slab.values[k].shape):
                w.writerow([f"{float(m[idx]):.17g}" for m in mesh] + [f"{t:.17g}", f"{float(slab.values[k][idx]):.17g}"])
