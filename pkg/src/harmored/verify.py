"""Numerical verification: residual reports over grids and the Green-identity
check relating the boundary flux of grad(u gamma) to the volume integral of
its Laplacian.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fd import DEFAULT_H, FDError, fd_gradient, fd_laplacian, fd_time_derivative  # noqa: F401
from .model import HarmonicGamma, PDEProblem, ScalarField
from .reduction import PerturbationSpec, apply_F, reduced_residual


@dataclass(frozen=True)
class Grid:
    box: tuple[tuple[float, float], ...]
    counts: tuple[int, ...]
    times: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "box", tuple((float(a), float(b)) for a, b in self.box))
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        if len(self.box) != len(self.counts):
            raise ValueError("box and counts must have one entry per axis")
        if any(c < 3 for c in self.counts):
            raise ValueError("every axis needs at least 3 points")
        if any(not b > a for a, b in self.box):
            raise ValueError("degenerate box")

    @property
    def n(self) -> int:
        return len(self.box)

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(a, b, c) for (a, b), c in zip(self.box, self.counts)]

    def points(self):
        """Grid nodes in C order with trapezoid weights in units of cell volume."""
        axes = self.axes()
        weights = []
        for c in self.counts:
            w = np.ones(c)
            w[0] = w[-1] = 0.5
            weights.append(w)
        for idx in itertools.product(*(range(c) for c in self.counts)):
            x = tuple(float(axes[k][i]) for k, i in enumerate(idx))
            w = math.prod(float(weights[k][i]) for k, i in enumerate(idx))
            yield x, w

    @property
    def cell_count(self) -> int:
        return math.prod(c - 1 for c in self.counts)


@dataclass
class SliceStats:
    t: float
    max_abs: float | None
    l2: float | None
    argmax: tuple[float, ...] | None
    failed: bool = False
    failure: str | None = None

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "maxAbs": self.max_abs,
            "L2": self.l2,
            "argmax": list(self.argmax) if self.argmax is not None else None,
            "failed": self.failed,
            "failure": self.failure,
        }


@dataclass
class ResidualReport:
    slices: list[SliceStats]
    metadata: dict = field(default_factory=dict)

    @property
    def max_abs(self) -> float:
        vals = [s.max_abs for s in self.slices if not s.failed]
        if len(vals) < len(self.slices):
            return math.inf
        return max(vals, default=0.0)

    def to_dict(self) -> dict:
        return {"metadata": dict(self.metadata), "slices": [s.to_dict() for s in self.slices]}


def grid_statistics(pointwise, grid: Grid, t: float) -> SliceStats:
    """Reduce ``pointwise(x, t)`` over the grid in fixed C order."""
    worst, where, acc = -1.0, None, 0.0
    for x, w in grid.points():
        try:
            r = float(pointwise(x, t))
        except (ArithmeticError, ValueError) as err:
            return SliceStats(t, None, None, None, True, f"{type(err).__name__} at x={list(x)}: {err}")
        if not math.isfinite(r):
            return SliceStats(t, None, None, None, True, f"non-finite value at x={list(x)}")
        a = abs(r)
        if a > worst:
            worst, where = a, x
        acc += w * r * r
    return SliceStats(t, worst, math.sqrt(acc), where)


def _report(pointwise, grid: Grid, metadata: dict, workers: int) -> ResidualReport:
    if workers > 1 and len(grid.times) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            slices = list(pool.map(lambda t: grid_statistics(pointwise, grid, t), grid.times))
    else:
        slices = [grid_statistics(pointwise, grid, t) for t in grid.times]
    return ResidualReport(slices, metadata)


def residual_report(u: ScalarField, prob: PDEProblem, grid: Grid, h: float = DEFAULT_H, *, sign: str | None = None, workers: int = 1) -> ResidualReport:
    """Residual of the PDE for ``u`` at every grid node and time slice."""
    meta = {"h": h, "field": u.label, "problem": prob.label}
    if sign is not None:
        meta["sign"] = sign
    return _report(lambda x, t: apply_F(u, prob, (x, t), h), grid, meta, workers)


def reduced_report(u: ScalarField, g: HarmonicGamma, prob: PDEProblem, spec: PerturbationSpec, grid: Grid, h: float = DEFAULT_H, *, sign: str | None = None, workers: int = 1) -> ResidualReport:
    meta = {"h": h, "field": u.label, "problem": prob.label, "gamma": g.field.label}
    if sign is not None:
        meta["sign"] = sign
    return _report(lambda x, t: reduced_residual(u, g, prob, spec, (x, t), h), grid, meta, workers)


def pointwise_integrand(u: ScalarField, g: HarmonicGamma, prob: PDEProblem, spec: PerturbationSpec, p, h: float = DEFAULT_H) -> float:
    """The volume integrand obtained by differencing the two Green identities,
    i.e. minus the reduced residual divided by u*gamma."""
    x, t = p
    return -reduced_residual(u, g, prob, spec, p, h) / (u(x, t) * g(x, t))


# --------------------------------------------------------------------------
# Green identity


def _midpoints(a: float, b: float, m: int) -> np.ndarray:
    w = (b - a) / m
    return a + w * (np.arange(m) + 0.5)


def green_identity_terms(u, g, box, resolution: int, t: float, h: float = DEFAULT_H) -> tuple[float, float]:
    """(surface flux of grad(u g), volume integral of lap(u g)), both by the
    midpoint rule with ``resolution`` cells per axis."""
    n = len(box)
    box = [(float(a), float(b)) for a, b in box]
    m = int(resolution)

    def w(x, t):
        return u(x, t) * g(x, t)

    mids = [_midpoints(a, b, m) for a, b in box]
    widths = [(b - a) / m for a, b in box]

    flux = 0.0
    for axis in range(n):
        others = [k for k in range(n) if k != axis]
        area = math.prod(widths[k] for k in others)
        for side, coord in ((-1.0, box[axis][0]), (1.0, box[axis][1])):
            for face_pt in itertools.product(*(mids[k] for k in others)):
                x = np.empty(n)
                x[axis] = coord
                for k, v in zip(others, face_pt):
                    x[k] = v
                grad = fd_gradient(w, (x, t), h)
                flux += side * grad[axis] * area

    cell = math.prod(widths)
    volume = 0.0
    for pt in itertools.product(*mids):
        volume += fd_laplacian(w, (np.array(pt), t), h) * cell
    return flux, volume


def green_identity_check(u, g, box, resolution: int, t: float, h: float = DEFAULT_H) -> float:
    flux, volume = green_identity_terms(u, g, box, resolution, t, h)
    return abs(flux - volume)
