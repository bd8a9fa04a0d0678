import numpy as np
import pytest

from harmored import expr as ex
from harmored.model import (
    HarmonicGamma,
    ProblemError,
    ScalarField,
    check_harmonic,
    make_gamma,
    make_problem,
    sample_points,
)
from harmored.fd import fd_gradient, fd_time_derivative
from harmored.ode import solve_f_const_B, solve_f_numeric


def test_heat_problem():
    prob = make_problem(1, ["0"], "1", "0")
    assert prob.n == 1
    assert prob.B.eval([0.3], 0.1) == 1.0
    assert prob.div_A.eval([0.3], 0.1) == 0.0


def test_radial_drift_problem():
    prob = make_problem(2, ["x1", "x2"], "-(t+1)", "0")
    assert prob.B.eval([0, 0], 1.0) == -2.0
    assert prob.div_A.eval([0.4, -1.0], 0.0) == 2.0
    assert list(prob.A_at([0.5, 0.25], 0.0)) == [0.5, 0.25]


def test_degenerate_B_rejected():
    with pytest.raises(ProblemError, match="degenerate B"):
        make_problem(1, ["0"], "0", "0")


def test_B_vanishing_only_somewhere_is_accepted():
    make_problem(1, ["0"], "x1", "0")


def test_wrong_A_length():
    with pytest.raises(ProblemError):
        make_problem(2, ["0"], "1", "0")


def test_parse_errors_propagate():
    with pytest.raises(ex.UnknownIdentifierError):
        make_problem(1, ["x2"], "1", "0")


def test_coordinate_gamma():
    g = make_gamma("coordinate", 2, axis=1)
    assert g(np.array([0.7, 3.0]), 1.0) == 0.7
    assert list(g.grad([0.7, 3.0], 1.0)) == [1.0, 0.0]
    assert g.dt([0.7, 3.0], 1.0) == 0.0


def test_time_scaled_gamma():
    g = make_gamma("time_scaled_coordinate", 1, axis=1, f="t")
    assert g([2.0], 3.0) == 6.0
    assert g.dt([2.0], 3.0) == 2.0
    assert list(g.grad([2.0], 3.0)) == [3.0]


def test_time_scaled_gamma_rejects_spatial_factor():
    with pytest.raises(ProblemError, match="t only"):
        make_gamma("time_scaled_coordinate", 2, axis=1, f="x2")


def test_axis_out_of_range():
    with pytest.raises(ProblemError):
        make_gamma("coordinate", 2, axis=3)


def test_linear_combination():
    g = make_gamma(
        "linear_combination", 2, coeffs=[2.0, -1.0],
        members=[make_gamma("coordinate", 2, axis=1), make_gamma("time_scaled_coordinate", 2, axis=2, f="t")],
    )
    assert g([1.0, 2.0], 3.0) == 2.0 - 6.0
    assert list(g.grad([1.0, 2.0], 3.0)) == [2.0, -3.0]
    assert g.dt([1.0, 2.0], 3.0) == -2.0


def test_gamma_from_numeric_f():
    fs = solve_f_numeric(ex.parse("-(t+1)", 1), -2.0, 2.0, 1e-3)
    g = make_gamma("time_scaled_coordinate", 2, axis=2, f=fs)
    assert g.value_expr is None
    assert g([0.5, 1.5], 1.0) == pytest.approx(fs.f(1.0) * 1.5, rel=1e-15)
    assert g.dt([0.5, 1.5], 1.0) == pytest.approx(fs.fprime(1.0) * 1.5, rel=1e-15)


def test_gamma_from_analytic_f_is_symbolic():
    g = make_gamma("time_scaled_coordinate", 1, axis=1, f=solve_f_const_B(-1.0))
    assert g.value_expr is not None
    assert g([2.0], 1.0) == pytest.approx(1.0)


def test_check_harmonic_linear_members():
    pts = sample_points(2, 50)
    assert check_harmonic(make_gamma("coordinate", 2, axis=1), pts, h=1e-2) <= 1e-9
    assert check_harmonic(make_gamma("time_scaled_coordinate", 2, axis=1, f="t"), pts, h=1e-2) <= 1e-9


def test_check_harmonic_flags_non_harmonic():
    g = HarmonicGamma.from_expr(ex.parse("x1^2", 2), 2)
    r = check_harmonic(g, sample_points(2, 20), h=1e-3)
    assert r == pytest.approx(2.0, rel=1e-5)


def test_check_harmonic_nan_is_failure():
    g = HarmonicGamma.from_expr(ex.parse("ln(x1)", 1), 1)
    assert check_harmonic(g, [((-1.0,), 0.5)], h=1e-3) == float("inf")


def _catalog(n):
    fs = solve_f_numeric(ex.parse("-(t+1)", 1), -2.0, 2.5, 1e-3)
    out = []
    for i in range(1, n + 1):
        out.append(make_gamma("coordinate", n, axis=i))
        out.append(make_gamma("time_scaled_coordinate", n, axis=i, f="t"))
        out.append(make_gamma("time_scaled_coordinate", n, axis=i, f=solve_f_const_B(-1.0)))
        out.append(make_gamma("time_scaled_coordinate", n, axis=i, f=fs))
    return out


@pytest.mark.parametrize("n", [1, 2, 3])
def test_catalog_is_harmonic_and_derivatives_match(n):
    rng = np.random.default_rng(n)
    pts = sample_points(n, 100, box=[(-1.99, 1.99)] * n, t_range=(0.01, 1.99), rng=rng)
    for g in _catalog(n):
        assert check_harmonic(g, pts, h=1e-4) <= 1e-6
        for x, t in pts[:20]:
            assert np.allclose(g.grad(x, t), fd_gradient(g, (x, t), 1e-5), atol=1e-6)
            assert abs(g.dt(x, t) - fd_time_derivative(g, (x, t), 1e-5)) <= 1e-6


def test_scalar_field_exact_derivatives():
    u = ScalarField.parse("x1^2*t + sin(x2)", 2)
    assert list(u.grad([1.0, 0.0], 2.0)) == [4.0, 1.0]
    assert u.dt([3.0, 0.0], 2.0) == 9.0
    assert u.laplacian([1.0, 0.5], 2.0) == pytest.approx(4.0 - np.sin(0.5))


def test_sample_points_deterministic():
    assert sample_points(2, 5) == sample_points(2, 5)
    for x, t in sample_points(3, 100):
        assert all(-2 <= v <= 2 for v in x) and 0 <= t <= 2
