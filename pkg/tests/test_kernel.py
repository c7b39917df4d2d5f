import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from critpeak.errors import CoincidentPoints, ModeDomainMismatch, OutsideDomain, ValidationError
from critpeak.kernel import (
    BallDomain,
    Bubble,
    ProjectionMode,
    bubble_constant,
    bubble_derivatives,
    eval_bubble,
    green_ball,
    green_constant,
    limit_kernels,
    project_bubble,
    project_bubble_derivatives,
    sup_phi_scaled,
)

dims = st.integers(3, 8)


def unit_vectors(rng, m, N):
    d = rng.normal(size=(m, N))
    return d / np.linalg.norm(d, axis=1)[:, None]


def in_ball(rng, m, N, radius):
    d = unit_vectors(rng, m, N)
    return d * (radius * rng.uniform(size=m) ** (1 / N))[:, None]


# --- bubble -------------------------------------------------------------------

def test_bubble_validation():
    with pytest.raises(ValidationError):
        Bubble.centered(2, 1.0)
    with pytest.raises(ValidationError):
        Bubble.centered(4, 0.0)
    with pytest.raises(ValidationError):
        Bubble(np.zeros(3), 1.0, 4)


def test_bubble_center_value_n4():
    assert eval_bubble(Bubble.centered(4, 1.0), np.zeros(4)) == pytest.approx(math.sqrt(8), rel=1e-15)


def test_bubble_unit_distance_n3():
    y = np.array([1.0, 0.0, 0.0])
    assert eval_bubble(Bubble.centered(3, 1.0), y) == pytest.approx(3 ** 0.25 * 2 ** -0.5, rel=1e-15)


@given(N=dims, lam=st.floats(0.01, 1e3), seed=st.integers(0, 10 ** 6))
def test_bubble_scaling_identity(N, lam, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=N)
    y = x + rng.normal(size=N) / lam
    lhs = eval_bubble(Bubble(x, lam, N), y)
    rhs = lam ** ((N - 2) / 2) * eval_bubble(Bubble(np.zeros(N), 1.0, N), lam * (y - x))
    assert lhs == pytest.approx(rhs, rel=1e-12)
    assert lhs > 0


@given(N=dims, seed=st.integers(0, 10 ** 6))
def test_bubble_depends_on_distance_only(N, seed):
    rng = np.random.default_rng(seed)
    b = Bubble(rng.normal(size=N), 2.0, N)
    z = rng.normal(size=N)
    Qm, _ = np.linalg.qr(rng.normal(size=(N, N)))
    assert eval_bubble(b, b.center + z) == pytest.approx(eval_bubble(b, b.center + Qm @ z), rel=1e-12)


@pytest.mark.parametrize("N", [3, 4, 5, 6, 7, 8])
def test_bubble_solves_critical_equation(N, rng):
    # second-order stencil: error ratio under halving h sits near 1/4
    b = Bubble(rng.normal(size=N) * 0.1, 1.3, N)
    p = (N + 2) / (N - 2)
    for y in b.center + rng.normal(size=(3, N)) * 0.7:
        errs = []
        for h in (0.04, 0.02, 0.01):
            lap = -2 * N * eval_bubble(b, y)
            for i in range(N):
                e = np.zeros(N)
                e[i] = h
                lap += eval_bubble(b, y + e) + eval_bubble(b, y - e)
            lap /= h * h
            target = eval_bubble(b, y) ** p
            errs.append(abs(-lap - target) / target)
        assert 0.2 <= errs[1] / errs[0] <= 0.3
        assert 0.2 <= errs[2] / errs[1] <= 0.3


# --- derivatives ---------------------------------------------------------------

@pytest.mark.parametrize("N", [3, 4, 5, 8])
def test_derivatives_at_center(N):
    b = Bubble(np.full(N, 0.2), 2.5, N)
    dl, dx = bubble_derivatives(b, b.center)
    assert dl == pytest.approx((N - 2) / (2 * b.height) * eval_bubble(b, b.center), rel=1e-14)
    assert np.all(dx == 0)


@given(N=dims, lam=st.floats(0.2, 20), seed=st.integers(0, 10 ** 6))
def test_derivatives_match_centered_differences(N, lam, seed):
    rng = np.random.default_rng(seed)
    b = Bubble(rng.normal(size=N), lam, N)
    y = b.center + rng.normal(size=N) / lam
    dl, dx = bubble_derivatives(b, y)
    h = 1e-5
    fd_l = (eval_bubble(b.with_height(lam * (1 + h)), y) - eval_bubble(b.with_height(lam * (1 - h)), y)) / (2 * h * lam)
    assert dl == pytest.approx(fd_l, rel=1e-6, abs=1e-8 * abs(eval_bubble(b, y)) / lam)
    scale = np.max(np.abs(dx)) + 1e-12
    for i in range(N):
        e = np.zeros(N)
        e[i] = h / lam
        fd = (eval_bubble(Bubble(b.center + e, lam, N), y) - eval_bubble(Bubble(b.center - e, lam, N), y)) / (2 * h / lam)
        assert abs(dx[i] - fd) <= 1e-6 * scale


# --- limit kernels --------------------------------------------------------------

def test_limit_kernel_value_n5():
    assert limit_kernels(5, 0, np.zeros(5)) == pytest.approx(1.5 * 15 ** 0.75, rel=1e-15)


@pytest.mark.parametrize("N", [3, 4, 5, 6])
def test_limit_kernel_center_values(N):
    assert limit_kernels(N, 0, np.zeros(N)) == pytest.approx((N - 2) / 2 * bubble_constant(N), rel=1e-15)
    for i in range(1, N + 1):
        assert limit_kernels(N, i, np.zeros(N)) == 0.0


@given(N=dims, seed=st.integers(0, 10 ** 6))
def test_limit_kernel_parity_and_zero_crossing(N, seed):
    rng = np.random.default_rng(seed)
    y = rng.normal(size=N)
    for i in range(1, N + 1):
        assert limit_kernels(N, i, -y) == pytest.approx(-limit_kernels(N, i, y), rel=1e-14)
    u = y / np.linalg.norm(y)
    assert limit_kernels(N, 0, 0.9 * u) > 0 > limit_kernels(N, 0, 1.1 * u)
    assert abs(limit_kernels(N, 0, u)) < 1e-14 * limit_kernels(N, 0, np.zeros(N))


def test_limit_kernel_index_range():
    with pytest.raises(ValidationError):
        limit_kernels(4, 5, np.zeros(4))


# --- Green's function ------------------------------------------------------------

@pytest.mark.parametrize("N", [3, 4, 5, 7])
def test_green_at_origin_is_radial(N, rng):
    D = BallDomain(N, 1.7)
    for y in in_ball(rng, 10, N, 1.6):
        G, _ = green_ball(D, np.zeros(N), y)
        r = np.linalg.norm(y)
        assert G == pytest.approx(green_constant(N) * (r ** (2 - N) - 1.7 ** (2 - N)), rel=1e-12)


@pytest.mark.parametrize("N", [3, 4, 5, 6])
def test_green_symmetry(N, rng):
    D = BallDomain(N, 1.3)
    xs, ys = in_ball(rng, 50, N, 1.25), in_ball(rng, 50, N, 1.25)
    Gxy, _ = green_ball(D, xs, ys)
    Gyx, _ = green_ball(D, ys, xs)
    assert np.all(np.abs(Gxy - Gyx) <= 1e-12 * np.abs(Gxy))
    assert np.all(Gxy > 0)


@pytest.mark.parametrize("N", [3, 4, 6])
def test_green_vanishes_linearly_at_boundary(N, rng):
    D = BallDomain(N, 1.0)
    x = in_ball(rng, 1, N, 0.5)[0]
    u = unit_vectors(rng, 1, N)[0]
    ratios = [green_ball(D, x, (1 - 10.0 ** -k) * u)[0] / 10.0 ** -k for k in range(2, 7)]
    # G ~ c * dist with c the inward normal derivative; successive ratios settle
    assert abs(ratios[-1] - ratios[-2]) <= 1e-4 * abs(ratios[-1])
    assert ratios[-1] > 0
    G, H = green_ball(D, x, u)
    assert abs(G) <= 1e-12 * H


def test_green_errors():
    D = BallDomain(3, 1.0)
    with pytest.raises(CoincidentPoints):
        green_ball(D, np.array([0.1, 0, 0]), np.array([0.1, 0, 0]))
    with pytest.raises(OutsideDomain):
        green_ball(D, np.array([1.1, 0, 0]), np.zeros(3))
    with pytest.raises(ValidationError):
        BallDomain(3, 0.0)


# --- projection --------------------------------------------------------------------

@pytest.mark.parametrize("N", [3, 4, 5, 6])
def test_centered_projection_is_constant(N, rng):
    lam = 4.0
    D = BallDomain(N, 1.0)
    y = in_ball(rng, 8, N, 0.99)
    PU, phi = project_bubble(Bubble.centered(N, lam), D, ProjectionMode.ExactConstantBoundary, y)
    expect = bubble_constant(N) * lam ** ((N - 2) / 2) * (1 + lam ** 2) ** (-(N - 2) / 2)
    assert np.allclose(phi, expect, rtol=1e-15)
    assert np.allclose(PU, eval_bubble(Bubble.centered(N, lam), y) - expect, rtol=1e-14)


@pytest.mark.parametrize("N", [3, 4, 5, 6])
def test_centered_projection_rate_limit(N):
    D = BallDomain(N, 1.0)
    vals = [
        project_bubble(Bubble.centered(N, lam), D, ProjectionMode.ExactConstantBoundary, np.zeros(N))[1] * lam ** ((N - 2) / 2)
        for lam in (1e2, 1e3, 1e4)
    ]
    errs = [abs(v / bubble_constant(N) - 1) for v in vals]
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-6


@pytest.mark.parametrize("N,degree,tol", [(3, 31, 1e-9), (4, 31, 1e-8), (5, 17, 1e-5)])
def test_poisson_mode_matches_exact_mode(N, degree, tol, rng):
    D = BallDomain(N, 1.0)
    b = Bubble.centered(N, 3.0)
    y = in_ball(rng, 10, N, 0.5)
    _, a = project_bubble(b, D, ProjectionMode.PoissonKernel, y, degree=degree)
    _, e = project_bubble(b, D, ProjectionMode.ExactConstantBoundary, y)
    assert np.max(np.abs(a - e)) <= tol * e[0]


@pytest.mark.parametrize("N", [3, 4])
def test_poisson_projection_vanishes_on_boundary(N, rng):
    D = BallDomain(N, 1.0)
    b = Bubble(np.r_[0.3, 0.1, np.zeros(N - 2)], 3.0, N)
    u = unit_vectors(rng, 20, N)
    PU, _ = project_bubble(b, D, ProjectionMode.PoissonKernel, u)
    assert np.max(np.abs(PU)) <= 1e-8
    # and approaches zero at a linear rate from inside
    slopes = [project_bubble(b, D, ProjectionMode.PoissonKernel, (1 - d) * u, degree=41)[0] / d for d in (0.2, 0.1)]
    assert np.all(np.isfinite(slopes[1])) and np.max(np.abs(slopes[1])) < 2 * np.max(np.abs(slopes[0])) + 1


@pytest.mark.parametrize("N", [3, 4])
def test_maximum_principle(N, rng):
    D = BallDomain(N, 1.0)
    b = Bubble(np.r_[0.4, np.zeros(N - 1)], 2.0, N)
    _, phi = project_bubble(b, D, ProjectionMode.PoissonKernel, in_ball(rng, 200, N, 0.9))
    bmax = np.max(eval_bubble(b, unit_vectors(rng, 20000, N)))
    bmax = max(bmax, float(eval_bubble(b, b.center / np.linalg.norm(b.center))))
    assert np.all(phi > 0) and np.all(phi <= bmax * (1 + 1e-10))


@pytest.mark.parametrize("N", [3, 4, 5])
def test_projection_rate_bounded_in_lambda(N, rng):
    D = BallDomain(N, 1.0)
    deg = 31 if N < 5 else 17
    y = in_ball(rng, 50, N, 0.9)
    c = np.r_[0.2, np.zeros(N - 1)]
    vals = [
        sup_phi_scaled(Bubble(c, lam, N), D, ProjectionMode.PoissonKernel, y) for lam in (1e1, 1e2, 1e3, 1e4)
    ]
    assert max(vals) <= 1.1 * min(vals)


def test_rey_mode_matches_poisson_at_large_lambda(rng):
    N = 4
    D = BallDomain(N, 1.0)
    b = Bubble(np.array([0.2, 0.1, 0, 0]), 200.0, N)
    y = in_ball(rng, 10, N, 0.6)
    _, a = project_bubble(b, D, ProjectionMode.PoissonKernel, y)
    _, r = project_bubble(b, D, ProjectionMode.ReyLeadingOrder, y)
    assert np.max(np.abs(a / r - 1)) < 1e-3


def test_mode_mismatch():
    D = BallDomain(4, 1.0)
    with pytest.raises(ModeDomainMismatch):
        project_bubble(Bubble(np.full(4, 0.1), 2.0, 4), D, ProjectionMode.ExactConstantBoundary, np.zeros(4))
    with pytest.raises(ModeDomainMismatch):
        project_bubble(Bubble.centered(3, 2.0), D, ProjectionMode.PoissonKernel, np.zeros(4))


@pytest.mark.parametrize("mode", [ProjectionMode.ExactConstantBoundary, ProjectionMode.PoissonKernel])
def test_projection_derivatives_match_differences(mode, rng):
    N = 4
    D = BallDomain(N, 1.0)
    b = Bubble.centered(N, 3.0)
    y = in_ball(rng, 4, N, 0.6)
    dl, dx = project_bubble_derivatives(b, D, mode, y)
    h = 1e-5
    p = lambda bb: project_bubble(bb, D, mode, y)[0]  # noqa: E731
    fd = (p(b.with_height(3 * (1 + h))) - p(b.with_height(3 * (1 - h)))) / (6 * h)
    assert np.allclose(dl, fd, rtol=1e-6, atol=1e-8)
    if mode is ProjectionMode.PoissonKernel:
        e = np.zeros(N)
        e[1] = h
        fdx = (p(Bubble(e, 3.0, N)) - p(Bubble(-e, 3.0, N))) / (2 * h)
        assert np.allclose(dx[:, 1], fdx, rtol=1e-5, atol=1e-7)
