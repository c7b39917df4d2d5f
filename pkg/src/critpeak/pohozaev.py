"""Local Pohozaev identities on balls B_d(x0): translation, dilation and their difference forms.

Fields are sampled through ``value(x)`` and ``grad(x)``. Fields that are radial
about the origin (computed solutions, centered bubbles) are integrated in polar
coordinates about the origin so the peak is resolved on the solution grid; other
fields use polar coordinates about x0.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import interpolate

from .errors import BallOutsideDomain, ValidationError, ZeroDifference
from .kernel import bubble_constant, critical_exponent
from .numerics import gauss_legendre_unit, sphere_area, sphere_rule
from .weights import WeightSpec

FLOOR = 1e-300


# ---------------------------------------------------------------------------
# fields

def centered_derivative(r: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Second-order three-point derivative on a nonuniform grid; u'(0) = 0 by symmetry."""
    du = np.empty_like(u)
    hm = r[1:-1] - r[:-2]
    hp = r[2:] - r[1:-1]
    du[1:-1] = (-hp / (hm * (hm + hp))) * u[:-2] + ((hp - hm) / (hm * hp)) * u[1:-1] + (hm / (hp * (hm + hp))) * u[2:]
    du[0] = 0.0
    h1, h2 = r[-1] - r[-2], r[-2] - r[-3]
    du[-1] = ((2 * h1 + h2) / (h1 * (h1 + h2))) * u[-1] - ((h1 + h2) / (h1 * h2)) * u[-2] + (h1 / (h2 * (h1 + h2))) * u[-3]
    return du


@dataclass(frozen=True, eq=False)
class RadialField:
    """u(|x|) from node values. Values and centered-difference slopes are cubic splines in r."""

    N: int
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.shape != v.shape or g[0] != 0:
            raise ValidationError("radial field needs values on a grid starting at r = 0")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_u", interpolate.CubicSpline(g, v, bc_type=((1, 0.0), "not-a-knot")))
        object.__setattr__(self, "_du", interpolate.CubicSpline(g, centered_derivative(g, v)))

    @classmethod
    def from_solution(cls, sol) -> "RadialField":
        return cls(sol.N, sol.grid, sol.values)

    @property
    def radius(self) -> float:
        return float(self.grid[-1])

    @property
    def breakpoints(self) -> np.ndarray:
        return self.grid

    def profile(self, r):
        return self._u(r)

    def slope(self, r):
        return self._du(r)

    def value(self, x):
        return self._u(np.linalg.norm(x, axis=-1))

    def grad(self, x):
        r = np.linalg.norm(x, axis=-1)
        safe = np.where(r > 0, r, 1.0)
        return (self._du(r) / safe)[..., None] * x


@dataclass(frozen=True, eq=False)
class BubbleField:
    """amplitude * U_{0,lam}, radial about the origin, with exact derivatives."""

    N: int
    lam: float
    amplitude: float = 1.0
    radius: float = math.inf

    @property
    def breakpoints(self) -> np.ndarray:
        top = 1e6 / self.lam if not math.isfinite(self.radius) else self.radius
        inner = np.geomspace(1e-4 / self.lam, top, 1200)
        return np.concatenate([[0.0], inner])

    def profile(self, r):
        c = bubble_constant(self.N) * self.amplitude
        return c * self.lam ** ((self.N - 2) / 2) * (1 + (self.lam * r) ** 2) ** (-(self.N - 2) / 2)

    def slope(self, r):
        c = bubble_constant(self.N) * self.amplitude
        return -c * (self.N - 2) * self.lam ** ((self.N + 2) / 2) * r * (1 + (self.lam * r) ** 2) ** (-self.N / 2)

    def value(self, x):
        return self.profile(np.linalg.norm(x, axis=-1))

    def grad(self, x):
        r = np.linalg.norm(x, axis=-1)
        safe = np.where(r > 0, r, 1.0)
        return (self.slope(r) / safe)[..., None] * x

    def laplacian(self, x):
        # -Delta U = U^{(N+2)/(N-2)} for amplitude 1
        u = self.value(x)
        p = (self.N + 2) / (self.N - 2)
        return -self.amplitude ** (1 - p) * u ** p


@dataclass(frozen=True, eq=False)
class AnalyticField:
    """A smooth test field given by callables (not assumed radial)."""

    N: int
    value: Callable
    grad: Callable
    laplacian: Callable | None = None
    radius: float = math.inf


def _is_radial(u) -> bool:
    return hasattr(u, "breakpoints") and hasattr(u, "profile")


# ---------------------------------------------------------------------------
# quadrature on balls and spheres

def _frame(N: int, axis: np.ndarray) -> np.ndarray:
    """Orthonormal basis with the first row along ``axis``."""
    e = axis / np.linalg.norm(axis)
    M = np.eye(N)
    M[:, 0] = e
    q, _ = np.linalg.qr(M)
    if np.dot(q[:, 0], e) < 0:
        q = -q
    return q.T


def cap_rule(N: int, axis, gamma_max, n_gamma: int = 32, eta_degree: int = 5):
    """Directions theta with angle(theta, axis) <= gamma_max and weights (dtheta on S^{N-1}).

    ``gamma_max`` may be an array; the result then has a leading axis over it.
    Gauss-Legendre in the polar angle times a sphere rule on S^{N-2}.
    """
    gm = np.atleast_1d(np.asarray(gamma_max, dtype=float))
    F = _frame(N, np.asarray(axis, dtype=float))
    t, w = gauss_legendre_unit(n_gamma)
    eta, weta = sphere_rule(N - 1, eta_degree)  # in the complement of the axis
    gam = gm[:, None] * t[None, :]  # (k, g)
    wg = gm[:, None] * w[None, :] * np.sin(gam) ** (N - 2)
    cos_g, sin_g = np.cos(gam), np.sin(gam)
    # theta = cos g * e + sin g * (eta in complement)
    local = np.concatenate(
        [
            np.broadcast_to(cos_g[:, :, None, None], gam.shape + (eta.shape[0], 1)),
            sin_g[:, :, None, None] * eta[None, None, :, :],
        ],
        axis=-1,
    )  # (k, g, e, N) in frame coordinates
    theta = local @ F
    W = wg[:, :, None] * weta[None, None, :]
    k = gm.size
    return theta.reshape(k, -1, N), W.reshape(k, -1)


@dataclass(frozen=True)
class QuadratureOptions:
    radial_points: int = 4
    n_gamma: int = 32
    eta_degree: int = 5
    sphere_degree: int = 5
    generic_radial: int = 48
    generic_degree: int = 17
    chunk: int = 256


def _ball_check(u, x0, d):
    R = getattr(u, "radius", math.inf)
    if not d > 0:
        raise ValidationError("ball radius must be positive")
    if np.linalg.norm(x0) + d >= R * (1 + 1e-14) and math.isfinite(R):
        raise BallOutsideDomain("B_d(x0) must lie inside the domain")


def _radial_volume_nodes(u, x0: np.ndarray, d: float, opt: QuadratureOptions):
    """Radial nodes/weights about the origin and the cap half-angle for each node."""
    t = float(np.linalg.norm(x0))
    lo, hi = max(0.0, t - d), t + d
    bp = np.asarray(u.breakpoints, dtype=float)
    inner = bp[(bp > lo) & (bp < hi)]
    extra = [x for x in (d - t,) if lo < x < hi]
    edges = np.unique(np.concatenate([[lo, hi], inner, extra]))
    g, w = gauss_legendre_unit(opt.radial_points)
    h = np.diff(edges)
    r = (edges[:-1, None] + h[:, None] * g[None, :]).ravel()
    wr = (h[:, None] * w[None, :]).ravel()
    if t == 0.0:
        gmax = np.full(r.shape, math.pi)
    else:
        c = (r * r + t * t - d * d) / (2 * r * t)
        gmax = np.arccos(np.clip(c, -1.0, 1.0))
    return r, wr, gmax, t


def integrate_volume(u, x0, d: float, integrand: Callable, opt: QuadratureOptions = QuadratureOptions()) -> np.ndarray:
    """∫_{B_d(x0)} integrand(x, u, grad u) dx; the integrand may return (n,) or (n, k) values."""
    x0 = np.asarray(x0, dtype=float)
    N = x0.size
    if _is_radial(u):
        r, wr, gmax, t = _radial_volume_nodes(u, x0, d, opt)
        axis = x0 if t > 0 else np.eye(N)[0]
        full = gmax >= math.pi * (1 - 1e-15)
        total = None
        if np.any(full):
            P, W = sphere_rule(N, opt.sphere_degree)
            rf, wf = r[full], wr[full]
            for s in range(0, rf.size, opt.chunk):
                rr, ww = rf[s:s + opt.chunk], wf[s:s + opt.chunk]
                X = rr[:, None, None] * P[None, :, :]
                wt = (ww * rr ** (N - 1))[:, None] * W[None, :]
                total = _accumulate(total, u, X.reshape(-1, N), wt.ravel(), integrand)
        part = ~full
        if np.any(part):
            rp, wp, gp = r[part], wr[part], gmax[part]
            for s in range(0, rp.size, opt.chunk):
                rr, ww, gg = rp[s:s + opt.chunk], wp[s:s + opt.chunk], gp[s:s + opt.chunk]
                theta, W = cap_rule(N, axis, gg, opt.n_gamma, opt.eta_degree)
                X = rr[:, None, None] * theta
                wt = (ww * rr ** (N - 1))[:, None] * W
                total = _accumulate(total, u, X.reshape(-1, N), wt.ravel(), integrand)
        return total
    # generic smooth field: polar coordinates about x0
    g, w = gauss_legendre_unit(opt.generic_radial)
    rho, wrho = d * g, d * w
    P, W = sphere_rule(N, opt.generic_degree)
    X = x0 + rho[:, None, None] * P[None, :, :]
    wt = (wrho * rho ** (N - 1))[:, None] * W[None, :]
    return _accumulate(None, u, X.reshape(-1, N), wt.ravel(), integrand)


def _accumulate(total, u, X, wt, integrand):
    vals = np.asarray(integrand(X, u.value(X), u.grad(X)), dtype=float)
    contrib = np.tensordot(wt, vals, axes=(0, 0))
    return contrib if total is None else total + contrib


def surface_rule(N: int, x0, d: float, u=None, opt: QuadratureOptions = QuadratureOptions()):
    """Points, weights and outward normals on the sphere ∂B_d(x0)."""
    x0 = np.asarray(x0, dtype=float)
    t = float(np.linalg.norm(x0))
    if u is not None and _is_radial(u) and t == 0.0:
        P, W = sphere_rule(N, max(opt.sphere_degree, 5))
    elif u is not None and _is_radial(u):
        theta, W = cap_rule(N, x0, math.pi, 2 * opt.n_gamma, max(opt.eta_degree, 7))
        P, W = theta[0], W[0]
    else:
        P, W = sphere_rule(N, opt.generic_degree)
    return x0 + d * P, d ** (N - 1) * W, P


def integrate_surface(u, x0, d: float, integrand: Callable, opt: QuadratureOptions = QuadratureOptions()) -> np.ndarray:
    """∫_{∂B_d(x0)} integrand(x, nu, u, grad u) dsigma."""
    x0 = np.asarray(x0, dtype=float)
    X, W, nu = surface_rule(x0.size, x0, d, u, opt)
    vals = np.asarray(integrand(X, nu, u.value(X), u.grad(X)), dtype=float)
    return np.tensordot(W, vals, axes=(0, 0))


# ---------------------------------------------------------------------------
# reports

class Identity(enum.Enum):
    Translation = "Translation"
    Dilation = "Dilation"
    DiffTranslation = "DiffTranslation"
    DiffDilation = "DiffDilation"


@dataclass(frozen=True)
class PohozaevReport:
    identity: Identity
    lhs: float
    rhs: float
    magnitude: float = 0.0
    axis: int | None = None
    terms: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.identity.value if self.axis is None else f"{self.identity.value}_{self.axis + 1}"

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def scale(self) -> float:
        return max(abs(self.lhs), abs(self.rhs), FLOOR)

    @property
    def relative_residual(self) -> float:
        return self.residual / self.scale

    @property
    def term_scale(self) -> float:
        """Largest individual term; meaningful when both sides cancel to near zero."""
        return max(self.scale, self.magnitude)

    @property
    def term_relative_residual(self) -> float:
        return self.residual / self.term_scale

    def as_dict(self) -> dict:
        return {
            "identity": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual": self.residual,
            "relative_residual": self.relative_residual,
            "term_relative_residual": self.term_relative_residual,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict())


def _exponents(N: int):
    p = (N + 2) / (N - 2)
    return p, critical_exponent(N)


def _pos(u, e):
    return np.maximum(u, 0.0) ** e


# ---------------------------------------------------------------------------
# single-solution identities

def translation_terms(u, Q: WeightSpec, eps: float, s: float, x0, d: float, axis: int, opt=QuadratureOptions()) -> dict:
    """Named pieces of the translation identity, each with its absolute size."""
    x0 = np.asarray(x0, dtype=float)
    N = x0.size
    _, two_star = _exponents(N)
    i = axis

    def vol(x, uv, g):
        a = Q.gradient(x)[:, i] * _pos(uv, two_star) / two_star
        return np.stack([a, np.abs(a)], axis=-1)

    def surf(x, nu, uv, g):
        dnu = np.sum(g * nu, axis=-1)
        t1 = dnu * g[:, i]
        t2 = Q.value(x) * _pos(uv, two_star) / two_star * nu[:, i]
        t3 = -0.5 * np.sum(g * g, axis=-1) * nu[:, i]
        t4 = eps / (s + 1) * _pos(uv, s + 1) * nu[:, i]
        return np.stack([t1, t2, t3, t4, np.abs(t1) + np.abs(t2) + np.abs(t3) + np.abs(t4)], axis=-1)

    V = integrate_volume(u, x0, d, vol, opt)
    S = integrate_surface(u, x0, d, surf, opt)
    return {
        "volume_dQ": V[0],
        "surface_flux": S[0],
        "surface_Q": S[1],
        "surface_grad": S[2],
        "surface_eps": S[3],
        "magnitude": max(V[1], S[4]),
    }


def eval_translation_identity(u, Q: WeightSpec, eps: float, s: float, x0, d: float, axis: int, opt=QuadratureOptions()) -> PohozaevReport:
    """(1/2*)∫ d_iQ u^{2*} against the boundary flux terms, on B_d(x0)."""
    x0 = np.asarray(x0, dtype=float)
    _ball_check(u, x0, d)
    if not 0 <= axis < x0.size:
        raise ValidationError("axis out of range")
    T = translation_terms(u, Q, eps, s, x0, d, axis, opt)
    rhs = T["surface_flux"] + T["surface_Q"] + T["surface_grad"] + T["surface_eps"]
    return PohozaevReport(Identity.Translation, float(T["volume_dQ"]), float(rhs), float(T["magnitude"]), axis, T)


def dilation_coefficient(N: int, s: float) -> float:
    """Coefficient of eps∫u^{s+1} in the dilation identity: 1 - N/2 + N/(1+s)."""
    return 1.0 - N / 2.0 + N / (1.0 + s)


def dilation_terms(u, Q: WeightSpec, eps: float, s: float, x0, d: float, opt=QuadratureOptions()) -> dict:
    x0 = np.asarray(x0, dtype=float)
    N = x0.size
    _, two_star = _exponents(N)

    def vol(x, uv, g):
        a = np.sum((x - x0) * Q.gradient(x), axis=-1) * _pos(uv, two_star) / two_star
        b = _pos(uv, s + 1)
        return np.stack([a, b, np.abs(a)], axis=-1)

    def surf(x, nu, uv, g):
        y = x - x0
        ynu = np.sum(y * nu, axis=-1)
        dnu = np.sum(g * nu, axis=-1)
        t1 = Q.value(x) * _pos(uv, two_star) / two_star * ynu
        t2 = eps / (s + 1) * _pos(uv, s + 1) * ynu
        t3 = -0.5 * np.sum(g * g, axis=-1) * ynu
        t4 = np.sum(y * g, axis=-1) * dnu
        t5 = 0.5 * (N - 2) * uv * dnu
        mag = np.abs(t1) + np.abs(t2) + np.abs(t3) + np.abs(t4) + np.abs(t5)
        return np.stack([t1, t2, t3, t4, t5, mag], axis=-1)

    V = integrate_volume(u, x0, d, vol, opt)
    S = integrate_surface(u, x0, d, surf, opt)
    coef = dilation_coefficient(N, s)
    return {
        "volume_Q": V[0],
        "volume_eps": coef * eps * V[1],
        "surface_Q": S[0],
        "surface_eps": S[1],
        "surface_grad": S[2],
        "surface_radial": S[3],
        "surface_u": S[4],
        "magnitude": max(V[2] + abs(coef * eps * V[1]), S[5]),
    }


def eval_dilation_identity(u, Q: WeightSpec, eps: float, s: float, x0, d: float, opt=QuadratureOptions()) -> PohozaevReport:
    """(1/2*)∫((x-x0)·∇Q)u^{2*} + (1-N/2+N/(1+s)) eps∫u^{s+1} against the boundary terms."""
    x0 = np.asarray(x0, dtype=float)
    _ball_check(u, x0, d)
    T = dilation_terms(u, Q, eps, s, x0, d, opt)
    lhs = T["volume_Q"] + T["volume_eps"]
    rhs = T["surface_Q"] + T["surface_eps"] + T["surface_grad"] + T["surface_radial"] + T["surface_u"]
    return PohozaevReport(Identity.Dilation, float(lhs), float(rhs), float(T["magnitude"]), None, T)


# ---------------------------------------------------------------------------
# step-by-step assembly following the integration-by-parts derivation

def derivation_terms_translation(u, Q, eps, s, x0, d, axis, opt=QuadratureOptions()) -> dict:
    """Volume and surface pieces of the two integration-by-parts steps for the d_i u multiplier.

    Step A: ∫ -Δu d_iu = -∫_∂ d_iu d_νu + ½∫_∂ |∇u|² ν^i.
    Step B: ∫ (Q u^{2*-1} + eps u^s) d_iu = (1/2*)∫_∂ Q u^{2*} ν^i + eps/(s+1)∫_∂ u^{s+1} ν^i - (1/2*)∫ d_iQ u^{2*}.
    """
    x0 = np.asarray(x0, dtype=float)
    N = x0.size
    p, two_star = _exponents(N)
    i = axis

    def vol(x, uv, g):
        return np.stack([Q.gradient(x)[:, i] * _pos(uv, two_star)], axis=-1)

    def surf(x, nu, uv, g):
        dnu = np.sum(g * nu, axis=-1)
        return np.stack(
            [g[:, i] * dnu, np.sum(g * g, axis=-1) * nu[:, i], Q.value(x) * _pos(uv, two_star) * nu[:, i], _pos(uv, s + 1) * nu[:, i]],
            axis=-1,
        )

    V = integrate_volume(u, x0, d, vol, opt)
    S = integrate_surface(u, x0, d, surf, opt)
    return {
        "A_surface_flux": -S[0],
        "A_surface_grad": 0.5 * S[1],
        "B_surface_Q": S[2] / two_star,
        "B_surface_eps": eps / (s + 1) * S[3],
        "B_volume_dQ": -V[0] / two_star,
    }


def assemble_translation(u, Q, eps, s, x0, d, axis, opt=QuadratureOptions()) -> tuple[float, float]:
    """Equate the two steps (the equation makes their left sides equal) and solve for the d_iQ term."""
    T = derivation_terms_translation(u, Q, eps, s, x0, d, axis, opt)
    step_a = T["A_surface_flux"] + T["A_surface_grad"]
    # step_a = B_surface_Q + B_surface_eps + B_volume_dQ
    lhs = -T["B_volume_dQ"]
    rhs = T["B_surface_Q"] + T["B_surface_eps"] - step_a
    return float(lhs), float(rhs)


def derivation_terms_dilation(u, Q, eps, s, x0, d, opt=QuadratureOptions()) -> dict:
    """Pieces of the three steps for the (x-x0)·∇u multiplier and the u multiplier.

    Step 1 (right side): ∫_∂ (Q u^{2*}/2* + eps u^{s+1}/(s+1))(y·ν) - ∫ [((y·∇Q) + N Q) u^{2*}/2* + N eps u^{s+1}/(s+1)].
    Step 2 (left side): (2-N)/2 ∫|∇u|² + ½∫_∂ (y·ν)|∇u|² - ∫_∂ (y·∇u) d_νu.
    Step 3: ∫|∇u|² = ∫_∂ d_νu u + ∫ (Q u^{2*} + eps u^{s+1}).
    """
    x0 = np.asarray(x0, dtype=float)
    N = x0.size
    _, two_star = _exponents(N)

    def vol(x, uv, g):
        y = x - x0
        return np.stack(
            [np.sum(y * Q.gradient(x), axis=-1) * _pos(uv, two_star), Q.value(x) * _pos(uv, two_star), _pos(uv, s + 1)],
            axis=-1,
        )

    def surf(x, nu, uv, g):
        y = x - x0
        ynu = np.sum(y * nu, axis=-1)
        dnu = np.sum(g * nu, axis=-1)
        return np.stack(
            [
                Q.value(x) * _pos(uv, two_star) * ynu,
                _pos(uv, s + 1) * ynu,
                np.sum(g * g, axis=-1) * ynu,
                np.sum(y * g, axis=-1) * dnu,
                dnu * uv,
            ],
            axis=-1,
        )

    V = integrate_volume(u, x0, d, vol, opt)
    S = integrate_surface(u, x0, d, surf, opt)
    return {
        "vol_ydQ": V[0],
        "vol_Q": V[1],
        "vol_eps": V[2],
        "surf_Q": S[0],
        "surf_eps": S[1],
        "surf_grad": S[2],
        "surf_radial": S[3],
        "surf_u": S[4],
    }


def assemble_dilation(u, Q, eps, s, x0, d, opt=QuadratureOptions()) -> tuple[float, float]:
    """Combine the three steps with ∫|∇u|² eliminated through step 3."""
    N = np.asarray(x0).size
    _, two_star = _exponents(N)
    T = derivation_terms_dilation(u, Q, eps, s, x0, d, opt)
    k = (2 - N) / 2
    # step 2 with step 3 substituted, moved against step 1
    lhs = (
        T["vol_ydQ"] / two_star
        + (N / two_star + k) * T["vol_Q"]
        + (N / (s + 1) + k) * eps * T["vol_eps"]
    )
    rhs = (
        T["surf_Q"] / two_star
        + eps / (s + 1) * T["surf_eps"]
        - 0.5 * T["surf_grad"]
        + T["surf_radial"]
        - k * T["surf_u"]
    )
    return float(lhs), float(rhs)


# ---------------------------------------------------------------------------
# difference identities

@dataclass(frozen=True, eq=False)
class DifferenceData:
    u1: RadialField
    u2: RadialField
    D1: RadialField
    D2: RadialField
    xi: RadialField
    normalizer: float
    s: float


def difference_data(u1: RadialField, u2: RadialField, s: float, nodes: int = 16) -> DifferenceData:
    """D1 = ∫(t u1 + (1-t) u2)^{(N+2)/(N-2)} dt and D2 with exponent s, by Gauss-Legendre in t."""
    if u1.N != u2.N or u1.grid.shape != u2.grid.shape or not np.array_equal(u1.grid, u2.grid):
        raise ValidationError("u1 and u2 must live on a common grid")
    diff = u1.values - u2.values
    nrm = float(np.max(np.abs(diff)))
    ref = max(float(np.max(np.abs(u1.values))), float(np.max(np.abs(u2.values))))
    if not nrm > FLOOR * max(ref, 1.0):
        raise ZeroDifference("the two solutions coincide; the difference quotient is undefined")
    t, w = gauss_legendre_unit(nodes)
    Wt = t[:, None] * u1.values[None, :] + (1 - t[:, None]) * u2.values[None, :]
    p = (u1.N + 2) / (u1.N - 2)
    D1 = w @ _pos(Wt, p)
    D2 = w @ _pos(Wt, s)
    g = u1.grid
    return DifferenceData(u1, u2, RadialField(u1.N, g, D1), RadialField(u1.N, g, D2), RadialField(u1.N, g, diff / nrm), nrm, s)


class _Bundle:
    """Samples u1, u2, xi, D1, D2 together so the quadrature sees one field."""

    def __init__(self, data: DifferenceData):
        self.data = data
        self.breakpoints = data.u1.grid
        self.radius = data.u1.radius
        self.profile = data.u1.profile

    def value(self, x):
        d = self.data
        return np.stack([d.u1.value(x), d.u2.value(x), d.xi.value(x), d.D1.value(x), d.D2.value(x)], axis=-1)

    def grad(self, x):
        d = self.data
        return np.stack([d.u1.grad(x), d.u2.grad(x), d.xi.grad(x)], axis=-2)


def _single_magnitude(data: DifferenceData, Q, eps, x0, d, which, axis, opt) -> float:
    """Largest term size of the single-solution identity over u1 and u2, per unit of the normalizer."""
    mags = []
    for u in (data.u1, data.u2):
        if which is Identity.DiffTranslation:
            mags.append(translation_terms(u, Q, eps, data.s, x0, d, axis, opt)["magnitude"])
        else:
            mags.append(dilation_terms(u, Q, eps, data.s, x0, d, opt)["magnitude"])
    return max(mags) / data.normalizer


def eval_difference_identities(
    data: DifferenceData,
    Q: WeightSpec,
    eps: float,
    s: float,
    x0,
    d: float,
    which: Identity,
    axis: int = 0,
    opt: QuadratureOptions = QuadratureOptions(),
) -> PohozaevReport:
    """Difference form of the translation or dilation identity for xi = (u1 - u2)/||u1 - u2||."""
    x0 = np.asarray(x0, dtype=float)
    _ball_check(data.u1, x0, d)
    if s != data.s:
        raise ValidationError("s does not match the difference data")
    N = x0.size
    B = _Bundle(data)

    def split(v, g):
        return v[:, 0], v[:, 1], v[:, 2], v[:, 3], v[:, 4], g[:, 0], g[:, 1], g[:, 2]

    if which is Identity.DiffTranslation:
        def vol(x, v, g):
            _, _, xi, D1, _, _, _, _ = split(v, g)
            a = Q.gradient(x)[:, axis] * D1 * xi
            return np.stack([a], axis=-1)

        def surf(x, nu, v, g):
            u1, u2, xi, D1, D2, g1, g2, gx = split(v, g)
            bulk = (Q.value(x) * D1 + eps * D2) * xi - 0.5 * np.sum((g1 + g2) * gx, axis=-1)
            flux = np.sum(g1 * nu, axis=-1) * gx[:, axis] + np.sum(gx * nu, axis=-1) * g2[:, axis]
            return np.stack([bulk * nu[:, axis] + flux], axis=-1)
    elif which is Identity.DiffDilation:
        coef = (1 + s) * (1 - N / 2) + N

        def vol(x, v, g):
            _, _, xi, D1, D2, _, _, _ = split(v, g)
            y = x - x0
            a = np.sum(y * Q.gradient(x), axis=-1) * D1 * xi + coef * eps * D2 * xi
            return np.stack([a], axis=-1)

        def surf(x, nu, v, g):
            u1, u2, xi, D1, D2, g1, g2, gx = split(v, g)
            y = x - x0
            ynu = np.sum(y * nu, axis=-1)
            t1 = (np.sum(y * g1, axis=-1) + 0.5 * (N - 2) * u1) * np.sum(gx * nu, axis=-1)
            t2 = (np.sum(y * gx, axis=-1) + 0.5 * (N - 2) * xi) * np.sum(g2 * nu, axis=-1)
            bulk = (Q.value(x) * D1 + eps * D2) * xi - 0.5 * np.sum((g1 + g2) * gx, axis=-1)
            return np.stack([t1 + t2 + bulk * ynu], axis=-1)
    else:
        raise ValidationError("which must be DiffTranslation or DiffDilation")

    lhs = float(integrate_volume(B, x0, d, vol, opt)[0])
    rhs = float(integrate_surface(B, x0, d, surf, opt)[0])
    mag = _single_magnitude(data, Q, eps, x0, d, which, axis, opt)
    return PohozaevReport(which, lhs, rhs, mag, axis if which is Identity.DiffTranslation else None)


def branch_residual(d_fraction: float = 0.5) -> Callable:
    """Callback for continuation: relative residual of the dilation identity on B_{d}(0), d = d_fraction R."""

    def cb(p, sol) -> float:
        Q = p.weight if p.weight is not None else WeightSpec.standard(p.N)
        u = RadialField.from_solution(sol)
        rep = eval_dilation_identity(u, Q, sol.eps, p.s, np.zeros(p.N), d_fraction * p.R)
        return rep.relative_residual

    return cb
