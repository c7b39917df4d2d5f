import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from critpeak.errors import DivergentTail, NonConvergence, SingularJacobian, ValidationError
from critpeak.numerics import (
    Box,
    NewtonConfig,
    NoSignChange,
    QuadratureSpec,
    RootBox,
    TridiagonalMatrix,
    face_values,
    fd_jacobian,
    gauss_legendre_unit,
    integrate_radial,
    miranda_search,
    newton_solve,
    sphere_area,
    sphere_rule,
)


# --- quadrature -------------------------------------------------------------

def test_constant_integrand():
    assert integrate_radial(lambda r: np.ones_like(r), 0.0, 1.0) == pytest.approx(1.0, abs=1e-14)


def test_beta_integrand_matches_beta_function():
    val = integrate_radial(lambda r: r ** 5 / (1 + r * r) ** 4, 0.0, math.inf)
    # t = r^2 gives (1/2) B(3, 1) = 1/6
    assert val == pytest.approx(0.5 * special.beta(3, 1), rel=1e-10)
    assert val == pytest.approx(1 / 6, rel=1e-10)


def test_exponential_tail():
    assert integrate_radial(lambda r: np.exp(-r), 0.0, math.inf) == pytest.approx(1.0, rel=1e-10)


def test_error_bound_reported():
    val, err = integrate_radial(lambda r: np.sin(r) ** 2, 0.0, 3.0, full_output=True)
    exact = 1.5 - math.sin(6.0) / 4
    assert abs(val - exact) <= max(err, 1e-14)
    assert err <= max(1e-10 * abs(val), 1e-14)


@given(
    coeffs=st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=12),
    a=st.floats(-3, 3),
    width=st.floats(0.01, 4),
)
def test_polynomials_are_integrated_exactly(coeffs, a, width):
    b = a + width
    poly = np.polynomial.Polynomial(coeffs)
    anti = poly.integ()
    exact = anti(b) - anti(a)
    val = integrate_radial(poly, a, b)
    scale = np.polynomial.Polynomial(np.abs(coeffs)).integ()(max(abs(a), abs(b))) * 2 + 1
    assert abs(val - exact) <= 1e-13 * scale


def test_slow_tail_is_rejected():
    with pytest.raises(DivergentTail):
        integrate_radial(lambda r: 1.0 / (1.0 + r), 0.0, math.inf)


def test_subdivision_budget_exhausted():
    spec = QuadratureSpec(rel_tol=1e-14, abs_tol=0.0, max_subdivisions=2)
    with pytest.raises(NonConvergence):
        integrate_radial(lambda r: np.sin(200 * r) ** 2 * np.sqrt(r), 0.0, 10.0, spec)


@pytest.mark.parametrize("kw", [dict(rel_tol=0.0), dict(abs_tol=-1.0), dict(max_subdivisions=0)])
def test_quadrature_spec_invariants(kw):
    with pytest.raises(ValidationError):
        QuadratureSpec(**kw)


def test_gauss_legendre_unit_exactness():
    x, w = gauss_legendre_unit(8)
    for k in range(16):
        assert np.dot(w, x ** k) == pytest.approx(1.0 / (k + 1), rel=1e-13)


@pytest.mark.parametrize("N", [3, 4, 5, 6, 7, 8])
def test_sphere_area_closed_form(N):
    assert sphere_area(N) == pytest.approx(2 * math.pi ** (N / 2) / math.gamma(N / 2), rel=1e-14)


@pytest.mark.parametrize("N", [2, 3, 4, 5, 6, 8])
@pytest.mark.parametrize("degree", [5, 9])
def test_sphere_rule_moments(N, degree):
    P, W = sphere_rule(N, degree)
    om = sphere_area(N)
    assert np.allclose(np.sum(P * P, axis=1), 1.0)
    assert W.sum() == pytest.approx(om, rel=1e-13)
    assert np.sum(W * P[:, 0] ** 2) == pytest.approx(om / N, rel=1e-12)
    assert np.sum(W * P[:, 0] ** 4) == pytest.approx(3 * om / (N * (N + 2)), rel=1e-12)
    assert np.sum(W * P[:, 0] ** 2 * P[:, 1] ** 2) == pytest.approx(om / (N * (N + 2)), rel=1e-12)
    assert abs(np.sum(W * P[:, 0] ** 3)) < 1e-13
    assert abs(np.sum(W * P[:, 0] * P[:, 1])) < 1e-13


def test_quadrature_is_thread_safe():
    f = lambda r: r ** 3 / (1 + r * r) ** 3  # noqa: E731
    ref = integrate_radial(f, 0.0, math.inf)
    with ThreadPoolExecutor(4) as ex:
        vals = list(ex.map(lambda _: integrate_radial(f, 0.0, math.inf), range(16)))
    assert all(v == ref for v in vals)


# --- linear algebra -----------------------------------------------------------

@given(n=st.integers(1, 30), seed=st.integers(0, 2 ** 16))
def test_tridiagonal_solve_matches_dense(n, seed):
    rng = np.random.default_rng(seed)
    lo, up = rng.normal(size=n - 1), rng.normal(size=n - 1)
    diag = 4 + np.abs(rng.normal(size=n))
    T = TridiagonalMatrix(lo, diag, up)
    b = rng.normal(size=n)
    x = T.solve(b)
    assert np.allclose(T.to_dense() @ x, b, atol=1e-12)
    assert np.allclose(T.matvec(x), b, atol=1e-12)


def test_singular_tridiagonal():
    T = TridiagonalMatrix(np.zeros(1), np.zeros(2), np.zeros(1))
    with pytest.raises(SingularJacobian):
        T.solve(np.ones(2))


# --- Newton -------------------------------------------------------------------

def test_newton_square_root():
    x = newton_solve(lambda x: x * x - 4, 3.0, lambda x: 2 * x)
    assert x == pytest.approx(2.0, abs=1e-12)


def test_newton_at_root_takes_no_steps():
    x, info = newton_solve(lambda x: x, 0.0, None, full_output=True)
    assert x == 0.0 and info.iterations == 0


def test_newton_linear_system_fd_jacobian():
    F = lambda v: np.array([v[0] + v[1] - 3, v[0] - v[1] - 1])  # noqa: E731
    assert np.allclose(newton_solve(F, np.zeros(2)), [2.0, 1.0], atol=1e-12)


def test_newton_quadratic_convergence():
    cfg = NewtonConfig(max_iters=50, residual_tol=1e-15)
    _, info = newton_solve(lambda x: x * x - 4, 3.0, lambda x: 2 * x, cfg, full_output=True)
    errs = [h for h in info.history if h > 1e-14]
    ratios = [errs[k + 1] / errs[k] for k in range(len(errs) - 1)]
    assert all(r < 0.5 for r in ratios[2:]) and ratios[-1] < 0.01


def test_newton_failure_modes():
    with pytest.raises(NonConvergence):
        newton_solve(lambda x: x * x + 1, 0.5, lambda x: 2 * x, NewtonConfig(max_iters=5))
    with pytest.raises(SingularJacobian):
        newton_solve(lambda v: np.array([v[0] ** 2 + 1.0, 1.0]), np.zeros(2), lambda v: np.zeros((2, 2)))


def test_fd_jacobian_accuracy():
    F = lambda v: np.array([np.sin(v[0]) * v[1], v[0] ** 3])  # noqa: E731
    x = np.array([0.3, 1.7])
    J = fd_jacobian(F, x)
    exact = np.array([[np.cos(0.3) * 1.7, np.sin(0.3)], [3 * 0.09, 0.0]])
    assert np.allclose(J, exact, atol=1e-8)


@pytest.mark.parametrize("kw", [dict(residual_tol=0.0), dict(damping_min=0.0), dict(damping_min=1.5)])
def test_newton_config_invariants(kw):
    with pytest.raises(ValidationError):
        NewtonConfig(**kw)


# --- Poincare-Miranda -----------------------------------------------------------

def test_box_invariants():
    with pytest.raises(ValidationError):
        Box([0.0, 1.0], [1.0, 1.0])


def test_miranda_scalar():
    r = miranda_search(lambda x: np.atleast_1d(x - 0.5), Box([0.0], [1.0]), 20)
    assert isinstance(r, RootBox) and r.box.contains(np.array([0.5]))
    assert r.box.width[0] <= 2 ** -20 * (1 + 1e-12)


def test_miranda_no_sign_change():
    r = miranda_search(lambda x: np.atleast_1d(x * x + 1), Box([-1.0], [1.0]), 10)
    assert isinstance(r, NoSignChange) and r.component == 0


def test_miranda_decoupled_linear():
    F = lambda v: np.array([v[0] - 0.3, v[1] + 0.2])  # noqa: E731
    r = miranda_search(F, Box([-1.0, -1.0], [1.0, 1.0]), 16)
    assert isinstance(r, RootBox) and r.box.contains(np.array([0.3, -0.2]))


@given(
    root=st.lists(st.floats(-0.9, 0.9), min_size=1, max_size=4),
    signs=st.lists(st.sampled_from([-1.0, 1.0]), min_size=4, max_size=4),
    slopes=st.lists(st.floats(0.1, 10), min_size=4, max_size=4),
)
def test_miranda_root_box_has_sign_change_on_faces(root, signs, slopes):
    k = len(root)
    a = np.array(root)
    g = np.array(signs[:k]) * np.array(slopes[:k])
    F = lambda v: g * (v - a) + 0.05 * np.tanh(v - a).sum() * 0  # noqa: E731
    r = miranda_search(F, Box(-np.ones(k), np.ones(k)), 8)
    assert isinstance(r, RootBox)
    for i in range(k):
        lo, hi = face_values(F, r.box, i)
        assert (np.all(lo <= 0) and np.all(hi >= 0)) or (np.all(lo >= 0) and np.all(hi <= 0))
    assert r.box.contains(a, slack=1e-12)
