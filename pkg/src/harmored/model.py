"""PDE problems ``lap u = A.grad u + B u_t + C u`` and the harmonic catalog."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.stats import qmc

from . import expr as ex
from .fd import DEFAULT_H, fd_laplacian

DEFAULT_HALF_WIDTH = 2.0
DEFAULT_T_RANGE = (0.0, 2.0)
DEGENERATE_B = 1e-12


class EvalPoint(NamedTuple):
    x: tuple[float, ...]
    t: float


class ProblemError(ValueError):
    pass


def default_box(n: int) -> list[tuple[float, float]]:
    return [(-DEFAULT_HALF_WIDTH, DEFAULT_HALF_WIDTH)] * n


def sample_points(n: int, count: int, box=None, t_range=DEFAULT_T_RANGE, rng=None) -> list[EvalPoint]:
    """Points in ``box x t_range``: Halton (deterministic) unless ``rng`` is given."""
    box = box or default_box(n)
    if rng is None:
        u = qmc.Halton(d=n + 1, scramble=False).random(count + 1)[1:]
    else:
        u = rng.random((count, n + 1))
    lo = np.array([b[0] for b in box] + [t_range[0]])
    hi = np.array([b[1] for b in box] + [t_range[1]])
    pts = lo + u * (hi - lo)
    return [EvalPoint(tuple(row[:n]), float(row[n])) for row in pts]


@dataclass(frozen=True)
class ScalarField:
    """Callable ``u(x, t)`` with optional exact derivative evaluators."""

    value: Callable[[Sequence[float], float], float]
    grad: Callable | None = None
    dt: Callable | None = None
    laplacian: Callable | None = None
    label: str = ""

    def __call__(self, x, t) -> float:
        return self.value(x, t)

    @classmethod
    def from_expr(cls, e: ex.Expr, n: int, label: str | None = None) -> "ScalarField":
        grad = ex.gradient(e, n)
        dt = ex.partial(e, "t")
        lap = ex.laplacian(e, n)
        return cls(
            value=e.eval,
            grad=lambda x, t: np.array([g.eval(x, t) for g in grad]),
            dt=dt.eval,
            laplacian=lap.eval,
            label=label if label is not None else ex.to_text(e),
        )

    @classmethod
    def parse(cls, text: str, n: int) -> "ScalarField":
        return cls.from_expr(ex.parse(text, n), n, label=text)


@dataclass(frozen=True)
class PDEProblem:
    n: int
    A: tuple[ex.Expr, ...]
    B: ex.Expr
    C: ex.Expr
    label: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise ProblemError("dimension must be >= 1")
        if len(self.A) != self.n:
            raise ProblemError(f"A has {len(self.A)} components, expected {self.n}")

    @property
    def div_A(self) -> ex.Expr:
        out: ex.Expr = ex.ZERO
        for i, a in enumerate(self.A, start=1):
            out = ex.add(out, ex.partial(a, f"x{i}"))
        return out

    def A_at(self, x, t) -> np.ndarray:
        return np.array([a.eval(x, t) for a in self.A])

    def time_only(self, e: ex.Expr) -> bool:
        return e.free_vars() <= {"t"}


def make_problem(n: int, A_texts: Sequence[str], B_text: str, C_text: str) -> PDEProblem:
    if n < 1:
        raise ProblemError("dimension must be >= 1")
    if len(A_texts) != n:
        raise ProblemError(f"A has {len(A_texts)} components, expected {n}")
    A = tuple(ex.parse(a, n) for a in A_texts)
    B = ex.parse(B_text, n)
    C = ex.parse(C_text, n)
    nonzero = False
    for x, t in sample_points(n, 100):
        try:
            if abs(B.eval(x, t)) >= DEGENERATE_B:
                nonzero = True
                break
        except ex.DomainError:
            continue
    if not nonzero:
        raise ProblemError(f"degenerate B: |B| < {DEGENERATE_B:g} at every sampled point ({B_text!r})")
    label = f"n={n}; A=[{', '.join(A_texts)}]; B={B_text}; C={C_text}"
    return PDEProblem(n, A, B, C, label)


# --------------------------------------------------------------------------
# harmonic catalog


@dataclass(frozen=True)
class HarmonicGamma:
    kind: str
    n: int
    field: ScalarField
    params: dict = field(default_factory=dict)
    value_expr: ex.Expr | None = None

    def __call__(self, x, t) -> float:
        return self.field.value(x, t)

    def grad(self, x, t) -> np.ndarray:
        return self.field.grad(x, t)

    def dt(self, x, t) -> float:
        return self.field.dt(x, t)

    @classmethod
    def from_expr(cls, e: ex.Expr, n: int, kind: str = "custom", **params) -> "HarmonicGamma":
        """Wrap an arbitrary expression; harmonicity is not guaranteed."""
        ex.check_dimension(e, n)
        return cls(kind, n, ScalarField.from_expr(e, n), dict(params), e)


def _temporal_factor(f, n: int):
    """Return (value, derivative, expr-or-None) callables of t for ``f``."""
    if isinstance(f, str):
        f = ex.parse(f, n)
    if isinstance(f, ex.Expr):
        if not f.free_vars() <= {"t"}:
            raise ProblemError(f"temporal factor must depend on t only: {ex.to_text(f)}")
        df = ex.partial(f, "t")
        return (lambda t: f.eval((), t)), (lambda t: df.eval((), t)), f
    # an FSolution-like object
    as_expr = getattr(f, "as_expr", None)
    e = as_expr() if as_expr is not None else None
    if e is not None:
        return _temporal_factor(e, n)
    return f.f, f.fprime, None


def make_gamma(kind: str, n: int, axis: int | None = None, f=None, coeffs=None, members=None) -> HarmonicGamma:
    """Build a catalog member.

    ``coordinate``: x_i.  ``time_scaled_coordinate``: f(t) x_i with ``f`` an
    expression in t or a solved temporal factor.  ``linear_combination``:
    sum of ``coeffs[k] * members[k]``.
    """
    if kind in ("coordinate", "time_scaled_coordinate"):
        if axis is None or not 1 <= axis <= n:
            raise ProblemError(f"axis must be in 1..{n}, got {axis}")
        xi = ex.Var(f"x{axis}")
        if kind == "coordinate":
            return HarmonicGamma.from_expr(xi, n, kind="coordinate", axis=axis)
        if f is None:
            raise ProblemError("time_scaled_coordinate needs a temporal factor f")
        fv, fp, fe = _temporal_factor(f, n)
        if fe is not None:
            return HarmonicGamma.from_expr(ex.mul(fe, xi), n, kind=kind, axis=axis, f=ex.to_text(fe))
        k = axis - 1

        def value(x, t):
            return fv(t) * x[k]

        def grad(x, t):
            g = np.zeros(n)
            g[k] = fv(t)
            return g

        def dt(x, t):
            return fp(t) * x[k]

        sf = ScalarField(value, grad, dt, lambda x, t: 0.0, label=f"f(t)*x{axis}")
        return HarmonicGamma(kind, n, sf, {"axis": axis, "f": getattr(f, "form", "callable")})
    if kind == "linear_combination":
        if not members or coeffs is None or len(coeffs) != len(members):
            raise ProblemError("linear_combination needs matching coeffs and members")
        if any(m.n != n for m in members):
            raise ProblemError("members must share the dimension")
        cs = [float(c) for c in coeffs]
        if all(m.value_expr is not None for m in members):
            e: ex.Expr = ex.ZERO
            for c, m in zip(cs, members):
                e = ex.add(e, ex.mul(ex.Num(c), m.value_expr))
            return HarmonicGamma.from_expr(e, n, kind=kind, coeffs=cs)
        sf = ScalarField(
            lambda x, t: sum(c * m(x, t) for c, m in zip(cs, members)),
            lambda x, t: sum(c * m.grad(x, t) for c, m in zip(cs, members)),
            lambda x, t: sum(c * m.dt(x, t) for c, m in zip(cs, members)),
            lambda x, t: 0.0,
            label="linear_combination",
        )
        return HarmonicGamma(kind, n, sf, {"coeffs": cs})
    raise ProblemError(f"unknown gamma kind {kind!r}")


def check_harmonic(g: HarmonicGamma, points: Sequence, h: float = DEFAULT_H) -> float:
    """Largest |FD Laplacian of gamma| over ``points``; inf when any point is NaN."""
    worst = 0.0
    for x, t in points:
        try:
            r = abs(fd_laplacian(g.field.value, (x, t), h))
        except (ArithmeticError, ValueError):
            return math.inf
        if math.isnan(r):
            return math.inf
        worst = max(worst, r)
    return worst


def harmonic_scale(g: HarmonicGamma, points: Sequence) -> float:
    return max((abs(g(x, t)) for x, t in points), default=0.0)
