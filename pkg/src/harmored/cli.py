"""Command-line pipeline: harmonic check, f-ODE solve, candidate construction
and the requested verification checks, written to report.json plus CSV grids.

Exit codes: 0 all assertable checks passed, 2 some assertable check failed,
1 invalid input.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import expr as ex
from .fd import DEFAULT_H
from .model import (
    EvalPoint,
    HarmonicGamma,
    PDEProblem,
    ProblemError,
    ScalarField,
    check_harmonic,
    default_box,
    harmonic_scale,
    make_gamma,
    make_problem,
)
from .ode import FSolution, ODEError, ode_residual, solve_f_const_B, solve_f_log_family, solve_f_numeric
from .reduction import SIGNS, PerturbationSpec, ReductionError, build_solution
from .reference import compare, solve_heat, stable_dt
from .report import SCHEMA_VERSION, write_grid_csv, write_json
from .verify import Grid, green_identity_terms, reduced_report, residual_report

log = logging.getLogger("harmored")

CHECKS = ("harmonic", "ode", "reduced", "pde_residual", "green", "reference")
ODE_TOL_ANALYTIC = 1e-8
ODE_TOL_NUMERIC = 1e-6
HARMONIC_TOL = 1e-6
REFERENCE_TOL = 1e-3


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"config field {field_name!r}: {message}")
        self.field = field_name


@dataclass
class RunConfig:
    n: int
    A: list[str]
    B: str
    C: str
    gamma: dict
    K: list[float]
    u0: str
    grid: dict
    h: float
    signs: list[str]
    checks: list[str]
    ode: dict
    perturbation: dict
    green: dict
    reference: dict
    seed: int = 0
    output: str = "out"
    problem: PDEProblem | None = field(default=None, repr=False)

    def echo(self) -> dict:
        return {
            "n": self.n,
            "A": list(self.A),
            "B": self.B,
            "C": self.C,
            "gamma": dict(self.gamma),
            "K": list(self.K),
            "u0": self.u0,
            "grid": dict(self.grid),
            "h": self.h,
            "signs": list(self.signs),
            "checks": list(self.checks),
            "ode": dict(self.ode),
            "perturbation": dict(self.perturbation),
            "green": dict(self.green),
            "reference": dict(self.reference),
            "seed": self.seed,
        }


def _number(raw, name):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(name, f"expected a number, got {raw!r}")
    return float(raw)


def _parse_expr(text, n, name):
    if not isinstance(text, str):
        raise ConfigError(name, f"expected an expression string, got {text!r}")
    try:
        return ex.parse(text, n)
    except ex.ExprError as err:
        raise ConfigError(name, str(err)) from None


def load_config(raw: dict, *, h: float | None = None, seed: int | None = None, output: str | None = None) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    n = raw.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigError("n", f"dimension must be a positive integer, got {n!r}")
    A = raw.get("A")
    if not isinstance(A, list) or len(A) != n:
        raise ConfigError("A", f"expected a list of {n} expressions")
    for i, a in enumerate(A):
        _parse_expr(a, n, f"A[{i}]")
    B = raw.get("B")
    C = raw.get("C", "0")
    _parse_expr(B, n, "B")
    _parse_expr(C, n, "C")
    try:
        problem = make_problem(n, A, B, C)
    except ProblemError as err:
        raise ConfigError("B", str(err)) from None

    gamma = dict(raw.get("gamma", {"kind": "time_scaled_coordinate", "axis": 1, "f": "auto"}))
    kind = gamma.get("kind")
    if kind not in ("coordinate", "time_scaled_coordinate", "custom"):
        raise ConfigError("gamma.kind", f"unknown kind {kind!r}")
    if kind == "custom":
        _parse_expr(gamma.get("value"), n, "gamma.value")
    else:
        axis = gamma.get("axis", 1)
        if isinstance(axis, bool) or not isinstance(axis, int) or not 1 <= axis <= n:
            raise ConfigError("gamma.axis", f"must be an integer in 1..{n}")
        gamma["axis"] = axis
        if kind == "time_scaled_coordinate":
            f = gamma.setdefault("f", "auto")
            if f != "auto":
                e = _parse_expr(f, n, "gamma.f")
                if not e.free_vars() <= {"t"}:
                    raise ConfigError("gamma.f", "temporal factor must depend on t only")

    if "K_scan" in raw:
        scan = raw["K_scan"]
        if not isinstance(scan, list) or not scan:
            raise ConfigError("K_scan", "expected a nonempty list of numbers")
        Ks = sorted(_number(k, "K_scan") for k in scan)
    else:
        if "K" not in raw:
            raise ConfigError("K", "either K or K_scan is required")
        Ks = [_number(raw["K"], "K")]

    u0 = raw.get("u0", "1")
    _parse_expr(u0, n, "u0")

    grid = dict(raw.get("grid", {}))
    grid.setdefault("box", [list(b) for b in default_box(n)])
    grid.setdefault("counts", [21] * n)
    grid.setdefault("times", [0.25, 0.5, 1.0])
    try:
        Grid(tuple(tuple(b) for b in grid["box"]), tuple(grid["counts"]), tuple(grid["times"]))
    except (TypeError, ValueError) as err:
        raise ConfigError("grid", str(err)) from None
    if len(grid["box"]) != n:
        raise ConfigError("grid.box", f"expected {n} axes")
    grid["box"] = [[float(a), float(b)] for a, b in grid["box"]]
    grid["times"] = [float(t) for t in grid["times"]]
    if any(t <= 0 for t in grid["times"]):
        raise ConfigError("grid.times", "times must be positive")

    hv = h if h is not None else raw.get("h", DEFAULT_H)
    hv = _number(hv, "h")
    if hv <= 0:
        raise ConfigError("h", "step must be positive")

    signs = raw.get("signs", list(SIGNS))
    if not isinstance(signs, list) or any(s not in SIGNS for s in signs):
        raise ConfigError("signs", f"each sign must be one of {list(SIGNS)}")

    checks = raw.get("checks", list(CHECKS))
    if not isinstance(checks, list) or any(c not in CHECKS for c in checks):
        raise ConfigError("checks", f"each check must be one of {list(CHECKS)}")
    checks = [c for c in CHECKS if c in checks]

    ode = dict(raw.get("ode", {}))
    ode.setdefault("branch", "auto")
    if ode["branch"] not in ("auto", "const_B", "log_family", "numeric"):
        raise ConfigError("ode.branch", f"unknown branch {ode['branch']!r}")
    ode["dt"] = _number(ode.get("dt", 1e-3), "ode.dt")
    ode.setdefault("t_max", max(grid["times"]) + 0.1)
    ode["t_max"] = _number(ode["t_max"], "ode.t_max")

    pert = dict(raw.get("perturbation", {"mode": "linear"}))
    if pert.get("mode", "linear") not in ("linear", "tabulated"):
        raise ConfigError("perturbation.mode", "must be 'linear' or 'tabulated'")
    pert.setdefault("mode", "linear")
    if pert["mode"] == "tabulated":
        for key in [f"A{i}" for i in range(1, n + 1)] + ["B", "C"]:
            _parse_expr(pert.get(key), n, f"perturbation.{key}")

    green = dict(raw.get("green", {}))
    green.setdefault("resolution", 32)
    green.setdefault("tolerance", 1e-3)

    reference = dict(raw.get("reference", {}))
    reference.setdefault("box", [[-4.0, 4.0]] * n)
    reference.setdefault("counts", [401] if n == 1 else [81] * n)
    reference.setdefault("t0", 0.25)
    reference.setdefault("t1", 0.5)

    sd = seed if seed is not None else raw.get("seed", 0)
    return RunConfig(
        n=n, A=list(A), B=B, C=C, gamma=gamma, K=Ks, u0=u0, grid=grid, h=hv,
        signs=list(signs), checks=checks, ode=ode, perturbation=pert, green=green,
        reference=reference, seed=int(sd), output=output or raw.get("output", "out"),
        problem=problem,
    )


# --------------------------------------------------------------------------
# pipeline stages


def _same_function(e: ex.Expr, text: str, ts) -> bool:
    other = ex.parse(text, 1)
    return all(abs(e.eval((), t) - other.eval((), t)) <= 1e-12 * (1 + abs(other.eval((), t))) for t in ts)


def _solve_f(cfg: RunConfig, K: float, warnings: list) -> tuple[FSolution, FSolution | None]:
    """Primary f for this K and, when an analytic branch was used, the numeric
    phi(0)=K solution for comparison."""
    B = cfg.problem.B
    branch = cfg.ode["branch"]
    if not B.free_vars() <= {"t"}:
        raise ConfigError("B", "the f-ODE needs B to depend on t only")
    numeric = None
    try:
        numeric = solve_f_numeric(B, K, cfg.ode["t_max"], cfg.ode["dt"])
    except ODEError as err:
        if branch == "numeric":
            raise ConfigError("ode", str(err)) from None
        warnings.append(f"numeric solve failed for K={K!r}: {err}")
    if numeric is not None and numeric.t_max < cfg.ode["t_max"]:
        warnings.append(f"numeric f for K={K!r} blew up; validity truncated at t={numeric.t_max!r}")
    ts = np.linspace(0.0, 2.0, 9)
    if branch == "auto":
        if not B.free_vars():
            branch = "const_B"
        elif _same_function(B, "-(t+1)", ts):
            branch = "log_family"
        else:
            branch = "numeric"
    if branch == "const_B":
        if B.free_vars():
            raise ConfigError("ode.branch", "const_B branch needs a constant B")
        return solve_f_const_B(K), numeric
    if branch == "log_family":
        if K == 0:
            raise ConfigError("K", "log-family formula is undefined for K = 0")
        return solve_f_log_family(K), numeric
    return numeric, None


def _ode_points(fs: FSolution, T: float) -> np.ndarray:
    return np.linspace(0.0, T, 52)[1:-1]


def _check_ode(cfg: RunConfig, fs: FSolution, T: float) -> dict:
    B = cfg.problem.B
    worst, ok = 0.0, True
    for t in _ode_points(fs, T):
        r = abs(ode_residual(fs, B, float(t), 1e-4))
        if fs.form == "numeric":
            phi = fs.phi(float(t))
            tol = ODE_TOL_NUMERIC * (1 + abs(B.eval((), float(t))) * phi * phi)
        else:
            tol = ODE_TOL_ANALYTIC
        ok = ok and r <= tol
        worst = max(worst, r)
    return {"max_residual": worst, "tolerance": ODE_TOL_ANALYTIC if fs.form != "numeric" else ODE_TOL_NUMERIC, "passed": ok}


def _trajectory(fs: FSolution, times) -> list:
    out = []
    for t in times:
        t = float(t)
        out.append({"t": t, "f": fs.f(t) if fs.contains(t) else None})
    return out


def _gamma(cfg: RunConfig, fs: FSolution) -> HarmonicGamma:
    g = cfg.gamma
    if g["kind"] == "custom":
        return HarmonicGamma.from_expr(ex.parse(g["value"], cfg.n), cfg.n, kind="custom")
    if g["kind"] == "coordinate":
        return make_gamma("coordinate", cfg.n, axis=g["axis"])
    f = fs if g["f"] == "auto" else g["f"]
    return make_gamma("time_scaled_coordinate", cfg.n, axis=g["axis"], f=f)


def _harmonic_points(cfg: RunConfig, T: float) -> list[EvalPoint]:
    rng = np.random.default_rng(cfg.seed)
    margin = 2 * cfg.h
    lo = np.array([b[0] + margin for b in cfg.grid["box"]])
    hi = np.array([b[1] - margin for b in cfg.grid["box"]])
    u = rng.random((100, cfg.n + 1))
    xs = lo + u[:, : cfg.n] * (hi - lo)
    ts = u[:, cfg.n] * T
    return [EvalPoint(tuple(map(float, x)), float(t)) for x, t in zip(xs, ts)]


def _heat_alpha(prob: PDEProblem) -> float | None:
    """alpha when the problem is lap u = alpha u_t with constant alpha > 0."""
    if any(a.free_vars() or a.eval((), 0.0) != 0.0 for a in prob.A):
        return None
    if prob.C.free_vars() or prob.C.eval((), 0.0) != 0.0:
        return None
    if prob.B.free_vars():
        return None
    alpha = prob.B.eval((), 0.0)
    return alpha if alpha > 0 else None


def heat_kernel(alpha: float, n: int):
    def value(x, t):
        r2 = float(np.dot(x, x))
        return (4.0 * math.pi * t / alpha) ** (-n / 2.0) * math.exp(-alpha * r2 / (4.0 * t))

    return ScalarField(value, label=f"heat_kernel(alpha={alpha!r}, n={n})")


def _fname(*parts) -> str:
    return "_".join(str(p) for p in parts) + ".csv"


def run(cfg: RunConfig, out_dir: Path, workers: int = 1) -> tuple[int, dict]:
    out_dir.mkdir(parents=True, exist_ok=True)
    prob = cfg.problem
    h = cfg.h
    report: dict = {"schema_version": SCHEMA_VERSION, "config": cfg.echo()}
    failures: list[str] = []
    warnings: list[str] = []

    # f-ODE per K (also needed by "auto" gamma)
    solved = []
    for K in cfg.K:
        fs, alt = _solve_f(cfg, K, warnings)
        solved.append((K, fs, alt))

    t_need = max(cfg.grid["times"])
    times_by_K = {}
    for K, fs, _ in solved:
        keep = [t for t in cfg.grid["times"] if t - h >= 0 and fs.contains(t + h)]
        dropped = [t for t in cfg.grid["times"] if t not in keep]
        if dropped:
            warnings.append(f"K={K!r}: times {dropped} outside f validity (t_max={fs.t_max!r}); dropped")
        times_by_K[K] = keep

    def horizon(fs):
        return t_need if fs.contains(t_need + h) else 0.99 * fs.t_max

    # harmonic
    if "harmonic" in cfg.checks:
        entries = []
        for K, fs, _ in solved:
            T = horizon(fs)
            g = _gamma(cfg, fs)
            pts = _harmonic_points(cfg, T)
            res = check_harmonic(g, pts, h)
            scale = harmonic_scale(g, pts)
            tol = HARMONIC_TOL * (1 + scale)
            ok = res <= tol
            if not ok:
                failures.append(f"harmonic[K={K!r}]")
            entries.append({"K": K, "gamma": g.field.label, "max_residual": res, "scale": scale, "tolerance": tol, "passed": ok})
            if cfg.gamma["kind"] != "time_scaled_coordinate" or cfg.gamma.get("f") != "auto":
                break
        report["harmonic"] = {"points": 100, "h": h, "entries": entries}

    # ode
    if "ode" in cfg.checks:
        entries = []
        traj_times = sorted(set([0.0] + list(np.round(np.linspace(0.0, t_need, 11), 12)) + cfg.grid["times"]))
        for K, fs, alt in solved:
            T = horizon(fs)
            chk = _check_ode(cfg, fs, T)
            if not chk["passed"]:
                failures.append(f"ode[K={K!r}]")
            entry = {"K": K, "form": fs.form, "t_max": fs.t_max, "fprime0": fs.fprime(0.0)}
            entry.update(chk)
            entry["trajectories"] = {fs.form: _trajectory(fs, traj_times)}
            if alt is not None:
                entry["trajectories"][alt.form] = _trajectory(alt, traj_times)
            entries.append(entry)
        report["ode"] = {"entries": entries, "warnings": list(warnings)}

    # candidates
    u0 = ScalarField.parse(cfg.u0, cfg.n)
    spec = (
        PerturbationSpec("linear")
        if cfg.perturbation["mode"] == "linear"
        else PerturbationSpec.tabulated({k: v for k, v in cfg.perturbation.items() if k != "mode"}, cfg.n)
    )
    candidates = []
    cand_entries = []
    for K, fs, _ in solved:
        times = times_by_K[K]
        for sign in cfg.signs:
            entry: dict = {"K": K, "sign": sign, "f_form": fs.form, "times": list(times)}
            try:
                cand = build_solution(u0, fs, prob, sign, t_end=max(times) + h if times else None)
            except (ReductionError, ValueError) as err:
                entry["error"] = str(err)
                cand_entries.append(entry)
                continue
            candidates.append((K, fs, sign, cand))
            grid = Grid(tuple(tuple(b) for b in cfg.grid["box"]), tuple(cfg.grid["counts"]), tuple(times)) if times else None
            files = []
            for i, t in enumerate(times):
                name = _fname("candidate", f"K{K!r}", sign, f"t{i}")
                rows = ((x, t, cand.value(x, t)) for x, _ in grid.points())
                write_grid_csv(out_dir / name, rows, cfg.n)
                files.append(name)
            entry["csv"] = files
            if grid is not None and "pde_residual" in cfg.checks:
                entry["residual"] = residual_report(cand.field, prob, grid, h, sign=sign, workers=workers).to_dict()
            if grid is not None and "reduced" in cfg.checks:
                g = _gamma(cfg, fs)
                entry["reduced"] = reduced_report(cand.field, g, prob, spec, grid, h, sign=sign, workers=workers).to_dict()
            cand_entries.append(entry)
    if {"pde_residual", "reduced"} & set(cfg.checks):
        report["candidate"] = cand_entries

    # green
    if "green" in cfg.checks:
        m = int(cfg.green["resolution"])
        tol = float(cfg.green["tolerance"])
        entries = []
        for K, fs, sign, cand in candidates:
            g = _gamma(cfg, fs)
            for t in times_by_K[K]:
                flux, vol = green_identity_terms(cand, g, cfg.grid["box"], m, t, h)
                flux2, vol2 = green_identity_terms(cand, g, cfg.grid["box"], 2 * m, t, h)
                d, d2 = abs(flux - vol), abs(flux2 - vol2)
                scale = 1 + max(abs(flux2), abs(vol2))
                ok = d2 <= tol * scale
                if not ok:
                    failures.append(f"green[K={K!r},{sign},t={t!r}]")
                entries.append({
                    "K": K, "sign": sign, "t": t, "flux": flux2, "volume": vol2,
                    "discrepancy": d2, "discrepancy_coarse": d, "resolution": 2 * m,
                    "tolerance": tol * scale, "passed": ok,
                })
        report["green"] = {"entries": entries}

    # reference
    if "reference" in cfg.checks:
        alpha = _heat_alpha(prob)
        ref = cfg.reference
        if alpha is None or cfg.n > 2:
            report["reference"] = {"skipped": "reference solver applies to lap u = alpha u_t with constant alpha > 0 in 1D/2D"}
        else:
            box = [tuple(b) for b in ref["box"]]
            counts = list(ref["counts"])
            dx = [(b - a) / (c - 1) for (a, b), c in zip(box, counts)]
            dt = stable_dt(dx, alpha)
            kern = heat_kernel(alpha, cfg.n)
            slab = solve_heat(kern, alpha, box, counts, ref["t0"], ref["t1"], dt)
            self_test = compare(slab, kern, ref["t1"])
            ok = self_test["maxAbs"] <= REFERENCE_TOL
            if not ok:
                failures.append("reference[self_test]")
            ts = sorted({t for t in cfg.grid["times"] if ref["t0"] <= t <= ref["t1"]} | {float(ref["t1"])})
            dist = []
            for K, fs, sign, cand in candidates:
                for t in ts:
                    if fs.contains(t):
                        c = compare(slab, cand, t)
                        dist.append({"K": K, "sign": sign, **c})
            report["reference"] = {
                "alpha": alpha, "box": [list(b) for b in box], "counts": counts, "dt": slab.dt,
                "self_test": {**self_test, "tolerance": REFERENCE_TOL, "passed": ok},
                "candidate_distance": dist,
            }

    code = 2 if failures else 0
    report["exit"] = {"code": code, "failed_checks": failures, "warnings": warnings}
    write_json(report, out_dir / "report.json")
    return code, report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="harmored", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run the pipeline on a JSON problem file")
    p.add_argument("config", type=Path)
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--h", type=float, default=None, help="finite-difference step")
    p.add_argument("--seed", type=int, default=None, help="seed for sampled check points")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(levelname)s: %(message)s")

    out_dir = args.out
    try:
        raw = json.loads(args.config.read_text())
    except OSError as err:
        print(f"error: cannot read {args.config}: {err.strerror}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as err:
        print(f"error: {args.config} is not valid JSON: {err}", file=sys.stderr)
        return 1
    try:
        cfg = load_config(raw, h=args.h, seed=args.seed)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        if out_dir is not None or isinstance(raw, dict):
            target = out_dir or Path(raw.get("output", "out"))
            target.mkdir(parents=True, exist_ok=True)
            write_json({
                "schema_version": SCHEMA_VERSION,
                "config": raw,
                "error": {"field": err.field, "message": str(err)},
                "exit": {"code": 1, "failed_checks": [], "warnings": []},
            }, target / "report.json")
        return 1
    out_dir = out_dir or Path(cfg.output)
    workers = max(1, int(os.environ.get("HARMORED_THREADS", "1") or 1))
    try:
        code, report = run(cfg, out_dir, workers)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    for w in report["exit"]["warnings"]:
        log.warning(w)
    for f in report["exit"]["failed_checks"]:
        log.error("check failed: %s", f)
    return code


if __name__ == "__main__":
    sys.exit(main())
