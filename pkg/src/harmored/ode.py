"""Temporal factor f(t) solving  d/ds[B f'/f] - B (f'/f)^2 = 0,  f(0) = 1.

Two closed forms and a numeric solver.  The numeric path works with the
logarithmic derivative phi = f'/f, for which the ODE becomes the Riccati
equation  phi' = phi^2 - (B'/B) phi,  and recovers f from ln f' = phi.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import expr as ex

BLOWUP = 1e12
MIN_STEP = 1e-12


class ValidityError(ValueError):
    pass


class ODEError(ValueError):
    pass


class FSolution:
    """f(t) on its validity interval [0, t_max) (closed at t_max for tables)."""

    form: str = ""

    def __init__(self, K: float, t_max: float = math.inf, closed: bool = False):
        self.K = float(K)
        self.t_max = float(t_max)
        self.closed = closed

    def contains(self, t: float) -> bool:
        if t < 0.0:
            return False
        return t <= self.t_max if self.closed else t < self.t_max

    def _check(self, t: float) -> float:
        if not self.contains(t):
            bracket = "]" if self.closed else ")"
            raise ValidityError(f"t={t} outside validity [0, {self.t_max}{bracket} of {self.form} f")
        return float(t)

    def f(self, t: float) -> float:
        raise NotImplementedError

    def fprime(self, t: float) -> float:
        raise NotImplementedError

    def phi(self, t: float) -> float:
        return self.fprime(t) / self.f(t)

    # exact phi' when available; None means callers use finite differences
    phiprime = None

    def as_expr(self) -> ex.Expr | None:
        return None

    def describe(self) -> dict:
        return {"form": self.form, "K": self.K, "t_max": self.t_max}


class ConstB(FSolution):
    form = "analyticConstB"

    def __init__(self, K: float):
        t_max = 1.0 / K if K > 0 else math.inf
        super().__init__(K, t_max)

    def f(self, t):
        t = self._check(t)
        return 1.0 / (1.0 - self.K * t)

    def fprime(self, t):
        t = self._check(t)
        return self.K / (1.0 - self.K * t) ** 2

    def phi(self, t):
        t = self._check(t)
        return self.K / (1.0 - self.K * t)

    def phiprime(self, t):
        return self.phi(t) ** 2

    def as_expr(self):
        if self.K == 0.0:
            return ex.ONE
        return ex.parse(f"1/(1 - ({self.K!r})*t)", 1)


class LogFamily(FSolution):
    """f = K/(K - ln(t+1)); note f'(0) = 1/K."""

    form = "analyticLogFamily"

    def __init__(self, K: float):
        t_max = math.exp(K) - 1.0 if K > 0 else math.inf
        super().__init__(K, t_max)

    def _d(self, t):
        return self.K - math.log1p(t)

    def f(self, t):
        t = self._check(t)
        return self.K / self._d(t)

    def fprime(self, t):
        t = self._check(t)
        return self.K / (self._d(t) ** 2 * (1.0 + t))

    def phi(self, t):
        t = self._check(t)
        return 1.0 / ((1.0 + t) * self._d(t))

    def phiprime(self, t):
        t = self._check(t)
        d = self._d(t)
        den = (1.0 + t) * d
        return (1.0 - d) / (den * den)

    def as_expr(self):
        return ex.parse(f"({self.K!r})/(({self.K!r}) - ln(abs(t + 1)))", 1)


class NumericF(FSolution):
    form = "numeric"

    def __init__(self, K, times, phi, lnf, dphi):
        super().__init__(K, float(times[-1]), closed=True)
        self.times = times
        self.phi_table = phi
        self.lnf_table = lnf
        if len(times) > 1:
            self._phi = CubicHermiteSpline(times, phi, dphi)
            self._lnf = CubicHermiteSpline(times, lnf, phi)
        else:
            self._phi = lambda t: phi[0]
            self._lnf = lambda t: lnf[0]

    def f(self, t):
        t = self._check(t)
        if t == 0.0:
            return 1.0
        return math.exp(float(self._lnf(t)))

    def phi(self, t):
        t = self._check(t)
        if t == 0.0:
            return self.K
        return float(self._phi(t))

    def fprime(self, t):
        return self.phi(t) * self.f(t)


def solve_f_const_B(K: float) -> FSolution:
    """f = 1/(1 - K t); blows up at t = 1/K when K > 0."""
    return ConstB(K)


def solve_f_log_family(K: float) -> FSolution:
    """The closed form f = K/(K - ln|t+1|), paired with B = -(t+1)."""
    if K == 0:
        raise ODEError("log-family formula is undefined for K = 0")
    return LogFamily(K)


def _time_only(B: ex.Expr) -> None:
    if not B.free_vars() <= {"t"}:
        raise ODEError(f"B must depend on t only: {ex.to_text(B)}")


def solve_f_numeric(B: ex.Expr, K: float, t_max: float, dt: float = 1e-3) -> NumericF:
    """RK4 on (phi, ln f) with phi(0) = K, ln f(0) = 0.

    Integration stops early, truncating the validity window, once |phi|
    exceeds the blow-up threshold or a single step would change phi by
    50% or more.
    """
    _time_only(B)
    if dt <= 0 or t_max <= 0:
        raise ODEError("dt and t_max must be positive")
    steps = max(1, math.ceil(t_max / dt - 1e-9))
    h = t_max / steps
    if h < MIN_STEP * max(1.0, t_max):
        raise ODEError(f"step underflow: dt={h}")
    dB = ex.partial(B, "t")
    x0 = ()
    prev = None
    for s in np.linspace(0.0, t_max, 2 * steps + 1):
        b = B.eval(x0, float(s))
        if abs(b) < 1e-12 or (prev is not None and (b > 0) != (prev > 0)):
            raise ODEError(f"B vanishes on [0, {t_max}] near t={float(s)}")
        prev = b

    def rhs(s, phi):
        b = B.eval(x0, s)
        if abs(b) < 1e-12:
            raise ODEError(f"B vanishes at t={s}")
        return phi * phi - dB.eval(x0, s) / b * phi

    times = [0.0]
    phis = [float(K)]
    lnfs = [0.0]
    dphis = [rhs(0.0, float(K))]
    phi, lnf = float(K), 0.0
    for k in range(steps):
        s = k * h
        k1 = dphis[-1]
        if phi != 0.0 and h * abs(k1) >= 0.5 * abs(phi):
            # growth no longer resolved by the step: a fixed step would jump the pole
            break
        p2 = phi + 0.5 * h * k1
        k2 = rhs(s + 0.5 * h, p2)
        p3 = phi + 0.5 * h * k2
        k3 = rhs(s + 0.5 * h, p3)
        p4 = phi + h * k3
        k4 = rhs(s + h, p4)
        new_phi = phi + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        new_lnf = lnf + h / 6.0 * (phi + 2 * p2 + 2 * p3 + p4)
        if not (math.isfinite(new_phi) and abs(new_phi) <= BLOWUP and math.isfinite(new_lnf)):
            break
        phi, lnf = new_phi, new_lnf
        times.append((k + 1) * h)
        phis.append(phi)
        lnfs.append(lnf)
        dphis.append(rhs((k + 1) * h, phi))
    return NumericF(K, np.array(times), np.array(phis), np.array(lnfs), np.array(dphis))


def ode_residual(fs: FSolution, B: ex.Expr, t: float, h: float = 1e-4) -> float:
    """(B phi)' - B phi^2 with exact B' and exact or central-difference phi'."""
    _time_only(B)
    if not fs.contains(t):
        raise ValidityError(f"t={t} outside validity of {fs.form} f")
    x0 = ()
    b = B.eval(x0, t)
    db = ex.partial(B, "t").eval(x0, t)
    phi = fs.phi(t)
    if fs.phiprime is not None:
        dphi = fs.phiprime(t)
    else:
        if not (fs.contains(t - h) and fs.contains(t + h)):
            raise ValidityError(f"stencil t+-{h} leaves validity of {fs.form} f")
        dphi = (fs.phi(t + h) - fs.phi(t - h)) / (2.0 * h)
    return db * phi + b * dphi - b * phi * phi
