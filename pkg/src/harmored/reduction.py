"""Harmonic reduction: the functional F, perturbations, the reduced
first-order relation, the closed-form closures for f(t) x_i multipliers and
the explicit candidate solution built from them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np

from . import expr as ex
from .fd import DEFAULT_H, fd_gradient, fd_laplacian, fd_time_derivative
from .model import HarmonicGamma, PDEProblem, ScalarField, sample_points
from .ode import FSolution, ValidityError

INTEGRAL_DERIVED = "integralDerived"
PAPER_PRINTED = "paperPrinted"
SIGNS = {INTEGRAL_DERIVED: 1.0, PAPER_PRINTED: -1.0}


class ReductionError(ValueError):
    pass


@dataclass(frozen=True)
class PerturbationSpec:
    """``linear``: coefficients unchanged by gamma.  ``tabulated``: disrupted
    coefficients given explicitly under keys ``A1..An``, ``B``, ``C``."""

    mode: str = "linear"
    disrupted: Mapping[str, ex.Expr] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("linear", "tabulated"):
            raise ReductionError(f"unknown perturbation mode {self.mode!r}")

    @classmethod
    def tabulated(cls, texts: Mapping[str, str], n: int) -> "PerturbationSpec":
        return cls("tabulated", {k: ex.parse(v, n) for k, v in texts.items()})


def perturbation(coeff: ex.Expr, spec: PerturbationSpec, key: str = "") -> ex.Expr:
    """P(coeff) = coeff_gamma - coeff."""
    if spec.mode == "linear":
        return ex.ZERO
    if key not in spec.disrupted:
        raise ReductionError(f"tabulated perturbation is missing disrupted coefficient {key!r}")
    return ex.BinOp("-", spec.disrupted[key], coeff)


def _disrupted(prob: PDEProblem, spec: PerturbationSpec):
    if spec.mode == "linear":
        return prob.A, prob.B, prob.C
    keys = [f"A{i}" for i in range(1, prob.n + 1)] + ["B", "C"]
    missing = [k for k in keys if k not in spec.disrupted]
    if missing:
        raise ReductionError(f"tabulated perturbation is missing {missing}")
    return tuple(spec.disrupted[f"A{i}"] for i in range(1, prob.n + 1)), spec.disrupted["B"], spec.disrupted["C"]


def _derivatives(u: ScalarField, p, h: float):
    """(value, gradient, time derivative, laplacian), exact where attached."""
    x, t = p
    val = u(x, t)
    grad = np.asarray(u.grad(x, t), dtype=float) if u.grad is not None else fd_gradient(u, p, h)
    dt = u.dt(x, t) if u.dt is not None else fd_time_derivative(u, p, h)
    lap = u.laplacian(x, t) if u.laplacian is not None else fd_laplacian(u, p, h)
    return val, grad, dt, lap


def apply_F(u: ScalarField, prob: PDEProblem, p, h: float = DEFAULT_H) -> float:
    """A.grad u + B u_t + C u - lap u at ``p``."""
    x, t = p
    val, grad, dt, lap = _derivatives(u, p, h)
    r = float(prob.A_at(x, t) @ grad) + prob.B.eval(x, t) * dt + prob.C.eval(x, t) * val - lap
    if math.isnan(r):
        raise ArithmeticError(f"NaN residual at x={list(x)}, t={t}")
    return r


def reduced_residual(u: ScalarField, g: HarmonicGamma, prob: PDEProblem, spec: PerturbationSpec, p, h: float = DEFAULT_H) -> float:
    """LHS - RHS of  2 grad(gamma).grad(u) = gamma [P(A).grad u + P(B) u_t + P(C) u]
    + u [A_gamma.grad(gamma) + B_gamma gamma_t]."""
    x, t = p
    val = u(x, t)
    grad = np.asarray(u.grad(x, t), dtype=float) if u.grad is not None else fd_gradient(u, p, h)
    gval, ggrad, gdt = g(x, t), np.asarray(g.grad(x, t), dtype=float), g.dt(x, t)
    A_g, B_g, _ = _disrupted(prob, spec)
    lhs = 2.0 * float(ggrad @ grad)
    rhs = val * (sum(a.eval(x, t) * gg for a, gg in zip(A_g, ggrad)) + B_g.eval(x, t) * gdt)
    if spec.mode != "linear":
        dt = u.dt(x, t) if u.dt is not None else fd_time_derivative(u, p, h)
        pA = [perturbation(a, spec, f"A{i}").eval(x, t) for i, a in enumerate(prob.A, start=1)]
        pB = perturbation(prob.B, spec, "B").eval(x, t)
        pC = perturbation(prob.C, spec, "C").eval(x, t)
        rhs += gval * (float(np.dot(pA, grad)) + pB * dt + pC * val)
    r = lhs - rhs
    if math.isnan(r):
        raise ArithmeticError(f"NaN reduced residual at x={list(x)}, t={t}")
    return r


# --------------------------------------------------------------------------
# closures for gamma = f(t) x_i


def _phi(f: FSolution, t: float) -> float:
    return f.fprime(t) / f.f(t)


def gradient_closure(prob: PDEProblem, f: FSolution, p) -> np.ndarray:
    """grad(u)/u = A/2 + (B f'/(2 f)) r."""
    x, t = p
    xv = np.asarray(x, dtype=float)
    return prob.A_at(x, t) / 2.0 + prob.B.eval(x, t) * _phi(f, t) / 2.0 * xv


def laplacian_closure(prob: PDEProblem, f: FSolution, p) -> float:
    """lap(u)/u = n B f'/(2f) + div(A)/2 + |grad(u)/u|^2."""
    x, t = p
    g = gradient_closure(prob, f, p)
    return prob.n * prob.B.eval(x, t) * _phi(f, t) / 2.0 + prob.div_A.eval(x, t) / 2.0 + float(g @ g)


def time_derivative_closure(prob: PDEProblem, f: FSolution, p) -> float:
    """u_t/u = n f'/(2f) + B (f' r/(2f))^2 - (C + div(A)/2)/B, as printed
    for the f(t) x_i multiplier."""
    x, t = p
    b = prob.B.eval(x, t)
    if abs(b) <= 1e-12:
        raise ReductionError(f"B vanishes at x={list(x)}, t={t}")
    phi = _phi(f, t)
    r2 = float(np.dot(x, x))
    return prob.n * phi / 2.0 + b * (phi / 2.0) ** 2 * r2 - (prob.C.eval(x, t) + prob.div_A.eval(x, t) / 2.0) / b


def time_derivative_from_pde(prob: PDEProblem, f: FSolution, p) -> float:
    """u_t/u obtained by solving the PDE itself for u_t given the gradient and
    Laplacian closures: (lap/u - A.grad/u - C)/B."""
    x, t = p
    b = prob.B.eval(x, t)
    if abs(b) <= 1e-12:
        raise ReductionError(f"B vanishes at x={list(x)}, t={t}")
    g = gradient_closure(prob, f, p)
    return (laplacian_closure(prob, f, p) - float(prob.A_at(x, t) @ g) - prob.C.eval(x, t)) / b


# --------------------------------------------------------------------------
# quadrature


def adaptive_simpson(fn, a: float, b: float, tol: float = 1e-10, max_depth: int = 40) -> float:
    if a == b:
        return 0.0

    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = fn(lm), fn(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        delta = left + right - whole
        if depth >= max_depth or abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        return recurse(a, m, fa, flm, fm, left, tol / 2.0, depth + 1) + recurse(m, b, fm, frm, fb, right, tol / 2.0, depth + 1)

    fa, fb, fm = fn(a), fn(b), fn(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 0)


# --------------------------------------------------------------------------
# candidate solution


def _spatially_constant(e: ex.Expr, n: int, t_range, what: str) -> None:
    pts = sample_points(n, 24, t_range=t_range)
    ref_x = np.zeros(n)
    for x, t in pts:
        a, b = e.eval(x, t), e.eval(ref_x, t)
        if abs(a - b) > 1e-12 * (1.0 + abs(b)):
            raise ReductionError(f"{what} must be constant in space for the static-r solution ({ex.to_text(e)})")


@dataclass
class CandidateSolution:
    """u = u0 f^(n/2) exp{ sign [B f'/(4f) r^2]_0^t - int_0^t (C + div(A)/2)/B ds }

    evaluated at static r (the path term along dr/ds vanishes)."""

    u0: ScalarField
    f: FSolution
    problem: PDEProblem
    sign: str = INTEGRAL_DERIVED

    def __post_init__(self):
        self.n = self.problem.n
        self._s = SIGNS[self.sign]
        prob = self.problem
        zero = np.zeros(self.n)

        def integrand(s):
            return (prob.C.eval(zero, s) + prob.div_A.eval(zero, s) / 2.0) / prob.B.eval(zero, s)

        self._integrand = integrand
        self._time_integral = lru_cache(maxsize=4096)(lambda t: adaptive_simpson(integrand, 0.0, t))
        self._bphi0 = prob.B.eval(zero, 0.0) * _phi(self.f, 0.0)

    def boundary_term(self, x, t) -> float:
        """[B f'/(4f) r^2] from 0 to t, without the sign convention."""
        zero = np.zeros(self.n)
        r2 = float(np.dot(x, x))
        return (self.problem.B.eval(zero, t) * _phi(self.f, t) - self._bphi0) * r2 / 4.0

    def time_integral(self, t: float) -> float:
        return self._time_integral(float(t))

    def exponent(self, x, t) -> float:
        return self._s * self.boundary_term(x, t) - self.time_integral(t)

    def value(self, x, t) -> float:
        fv = self.f.f(t)
        return self.u0(x, t) * fv ** (self.n / 2.0) * math.exp(self.exponent(x, t))

    __call__ = value

    @property
    def field(self) -> ScalarField:
        return ScalarField(self.value, label=f"candidate[{self.f.form}, K={self.f.K!r}, {self.sign}]")


def build_solution(u0: ScalarField, f: FSolution, prob: PDEProblem, sign: str = INTEGRAL_DERIVED, t_end: float | None = None) -> CandidateSolution:
    if sign not in SIGNS:
        raise ReductionError(f"unknown sign convention {sign!r}")
    if t_end is not None and not f.contains(t_end):
        raise ValidityError(f"f is not valid up to t={t_end} (validity ends at {f.t_max})")
    hi = min(t_end if t_end is not None else 2.0, f.t_max)
    t_range = (0.0, hi if f.contains(hi) else 0.999 * hi)
    _spatially_constant(prob.B, prob.n, t_range, "B")
    _spatially_constant(prob.C, prob.n, t_range, "C")
    _spatially_constant(prob.div_A, prob.n, t_range, "div(A)")
    return CandidateSolution(u0, f, prob, sign)
