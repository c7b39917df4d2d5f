"""Constants, rate functions and quadrature evaluators for the interaction integrals.

Every evaluator returns an :class:`Estimate` pairing the quadrature value with
its leading-order prediction. Leading orders carry the bubble normalization
``c = (N(N-2))^((N-2)/4)`` so that ratios tend to one.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DivergentIntegral, SeparationViolated, ValidationError
from .kernel import (
    Bubble,
    bubble_constant,
    bubble_profile,
    bubble_profile_dlam,
    critical_exponent,
)
from .numerics import QuadratureSpec, integrate_radial, sphere_area, sphere_rule
from .weights import WeightSpec


@dataclass(frozen=True)
class ConstantsTable:
    N: int
    s: float
    A: float
    B: float
    omega_N: float
    S: float

    def as_dict(self) -> dict:
        return {"N": self.N, "s": self.s, "A": self.A, "B": self.B, "omega_N": self.omega_N, "S": self.S}


def check_exponent(N: int, s: float) -> None:
    if N < 3:
        raise ValidationError("N must be at least 3")
    if not 1.0 <= s < (N + 2.0) / (N - 2.0):
        raise ValidationError(f"s must lie in [1, {(N + 2) / (N - 2):g}) for N={N}")


def closed_form_A(N: int) -> float:
    return sphere_area(N) / (2 * N) * math.exp(
        special.gammaln((N + 2) / 2) + special.gammaln((N - 2) / 2) - special.gammaln(N)
    )


def closed_form_B(N: int, s: float) -> float:
    k = (N - 2) * (s + 1) / 2
    if k <= N / 2:
        raise DivergentIntegral("B diverges unless (N-2)(s+1) > N")
    return sphere_area(N) / 2 * special.beta(N / 2, k - N / 2)


def closed_form_S(N: int) -> float:
    """Best Sobolev constant N(N-2)/4 * |S^N|^(2/N)."""
    return N * (N - 2) / 4 * sphere_area(N + 1) ** (2 / N)


def _power_mass(N: int, k: float, spec: QuadratureSpec) -> float:
    """Integral over R^N of (1+|y|^2)^(-k)."""
    if k <= N / 2:
        raise DivergentIntegral(f"integral of (1+|y|^2)^(-{k:g}) diverges in R^{N}")
    return sphere_area(N) * integrate_radial(lambda r: r ** (N - 1) * (1 + r * r) ** (-k), 0.0, math.inf, spec)


def sobolev_quotient(N: int, lam: float = 1.0, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """int |grad U|^2 / (int U^2*)^(2/2*) for the centered bubble of height lam."""
    p2 = critical_exponent(N)
    c = bubble_constant(N)
    om = sphere_area(N)
    brk = (1.0 / lam, 10.0 / lam)

    def grad2(r):
        q = (lam * r) ** 2
        du = -c * (N - 2) * lam ** ((N + 2) / 2) * r * (1 + q) ** (-N / 2)
        return r ** (N - 1) * du * du

    def mass(r):
        return r ** (N - 1) * bubble_profile(N, lam, r) ** p2

    g = om * integrate_radial(grad2, 0.0, math.inf, spec, breakpoints=brk)
    m = om * integrate_radial(mass, 0.0, math.inf, spec, breakpoints=brk)
    return g / m ** (2.0 / p2)


def quadrature_A(N: int, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """(1/N) times the integral of |y|^2 (1+|y|^2)^(-N) over R^N."""
    return sphere_area(N) / N * integrate_radial(lambda r: r ** (N + 1) * (1 + r * r) ** (-N), 0.0, math.inf, spec)


def quadrature_B(N: int, s: float, spec: QuadratureSpec = QuadratureSpec()) -> float:
    return _power_mass(N, (N - 2) * (s + 1) / 2, spec)


def compute_constants(N: int, s: float, spec: QuadratureSpec = QuadratureSpec()) -> ConstantsTable:
    """A, B, omega_N and S, with A, B and S by radial quadrature."""
    check_exponent(N, s)
    A = quadrature_A(N, spec)
    B = quadrature_B(N, s, spec)
    S = sobolev_quotient(N, 1.0, spec)
    return ConstantsTable(N=N, s=float(s), A=A, B=B, omega_N=sphere_area(N), S=S)


# ---------------------------------------------------------------------------
# rate functions

def eval_eta(N: int, s: float, lam: float) -> float:
    """Three-case rate selected by the sign of (N-2)s - N (log case at equality)."""
    key = (N - 2) * s - N
    if key > 0:
        return lam ** (-(N - (N - 2) * s / 2))
    if key == 0:
        return math.log(lam) / lam ** (N - (N - 2) * s / 2)
    return lam ** (-(N - 2) * s / 2)


def eval_eta1(N: int, s: float, lam: float) -> float:
    """Three-case rate selected by s against (N+2)/(2(N-2))."""
    thr = (N + 2) / (2 * (N - 2))
    expo = (N + 2) / 2 - (N - 2) * s / 2
    if s > thr:
        return lam ** (-expo)
    if s == thr:
        return math.log(lam) ** ((N + 2) / (2 * N)) / lam ** expo
    return lam ** (-(N - 2) * s / 2)


# ---------------------------------------------------------------------------
# single-center evaluators

@dataclass(frozen=True)
class Estimate:
    value: float
    leading: float

    @property
    def ratio(self) -> float:
        return self.value / self.leading if self.leading != 0 else math.nan


_QSPEC = QuadratureSpec(rel_tol=1e-11, abs_tol=1e-300, max_subdivisions=20000)


def _centered_ball_integral(N, d, lam, integrand, degree=5, spec=_QSPEC):
    """Integral over B_d of ``integrand(r, z)``, with z the offsets r*theta of shape (nr, nq, N)."""
    P, W = sphere_rule(N, degree)

    def radial(r):
        z = r[:, None, None] * P[None, :, :]
        return r ** (N - 1) * (integrand(r, z) @ W)

    def magnitude(r):
        z = r[:, None, None] * P[None, :, :]
        return r ** (N - 1) * (np.abs(integrand(r, z)) @ np.abs(W))

    brk = [t / lam for t in (0.3, 1.0, 3.0, 10.0, 30.0, 100.0) if t / lam < d]
    # cancelling integrands (odd in z) need an absolute floor tied to their size
    mag = integrate_radial(magnitude, 0.0, d, QuadratureSpec(rel_tol=1e-6, abs_tol=1e-300), breakpoints=brk)
    tight = QuadratureSpec(spec.rel_tol, max(spec.abs_tol, 1e-13 * mag), spec.max_subdivisions)
    return integrate_radial(radial, 0.0, d, tight, breakpoints=brk)


def _projected(N, lam, R):
    """PU(r) and dPU/dlam(r) for the bubble centered in B_R (constant harmonic part)."""
    if math.isinf(R):
        return (lambda r: bubble_profile(N, lam, r)), (lambda r: bubble_profile_dlam(N, lam, r))
    phi = bubble_profile(N, lam, R)
    dphi = bubble_profile_dlam(N, lam, R)
    return (lambda r: bubble_profile(N, lam, r) - phi), (lambda r: bubble_profile_dlam(N, lam, r) - dphi)


def _domain_radius(d, domain_radius):
    R = 4.0 * d if domain_radius is None else float(domain_radius)
    if R < d:
        raise ValidationError("the projection domain must contain the integration ball")
    return R


def _check_peak(b: Bubble, Q: WeightSpec, tol=1e-10):
    g = np.asarray(Q.gradient(b.center))
    scale = max(1.0, float(np.max(np.abs(Q.hessian(b.center)))))
    if np.linalg.norm(g) > tol * scale:
        raise ValidationError("bubble must sit at a critical point of Q")


def weighted_mass_dilation(
    b: Bubble, Q: WeightSpec, d: float, *, domain_radius: float | None = None, degree: int = 5
) -> Estimate:
    """Integral over B_d(a) of ((x-a).grad Q) PU^2*; leading c^2* A Delta Q(a) / lam^2."""
    _check_peak(b, Q)
    N, lam, a = b.dimension, b.height, b.center
    R = _domain_radius(d, domain_radius)
    PU, _ = _projected(N, lam, R)
    p2 = critical_exponent(N)

    def integrand(r, z):
        xdg = np.sum(z * Q.gradient(a + z), axis=-1)
        return xdg * PU(r)[:, None] ** p2

    value = _centered_ball_integral(N, d, lam, integrand, degree)
    lap = float(Q.laplacian(a))
    leading = bubble_constant(N) ** p2 * closed_form_A(N) * lap / lam ** 2
    return Estimate(value, leading)


def bubble_power_mass(
    b: Bubble, s: float, d: float, *, domain_radius: float | None = None
) -> Estimate:
    """Integral over B_d of PU^(s+1).

    Leading order c^(s+1) B lam^(g-2) with g = (N-2)(s-1)/2, or
    c^2 omega_4 log(lam)/lam^2 when N + s = 5.
    """
    N, lam = b.dimension, b.height
    R = _domain_radius(d, domain_radius) if not math.isinf(d) else math.inf
    PU, _ = _projected(N, lam, R)
    c = bubble_constant(N)
    brk = [t / lam for t in (1.0, 10.0, 100.0) if t / lam < d]
    spec = _QSPEC
    value = sphere_area(N) * integrate_radial(
        lambda r: r ** (N - 1) * np.maximum(PU(r), 0.0) ** (s + 1), 0.0, d, spec, breakpoints=brk
    )
    if N + s == 5:
        leading = c ** 2 * sphere_area(4) * math.log(lam) / lam ** 2
    else:
        g = (N - 2) * (s - 1) / 2
        leading = c ** (s + 1) * closed_form_B(N, s) * lam ** (g - 2)
    return Estimate(value, leading)


# ---------------------------------------------------------------------------
# interaction integrals

class InteractionKind(enum.Enum):
    DilationWeighted = "DilationWeighted"
    TranslationWeighted = "TranslationWeighted"
    SubcriticalDilation = "SubcriticalDilation"
    TranslationSubcritical = "TranslationSubcritical"
    CrossDilationCritical = "CrossDilationCritical"
    CrossDilationSubcritical = "CrossDilationSubcritical"
    CrossTranslationCritical = "CrossTranslationCritical"
    CrossTranslationSubcritical = "CrossTranslationSubcritical"

    @property
    def cross(self) -> bool:
        return self.name.startswith("Cross")


_CROSS_RATE = {
    InteractionKind.CrossDilationCritical: lambda N: N - 1,
    InteractionKind.CrossDilationSubcritical: lambda N: N - 1,
    InteractionKind.CrossTranslationCritical: lambda N: N - 3,
    InteractionKind.CrossTranslationSubcritical: lambda N: N - 3,
}


def translation_constant(N: int) -> float:
    """(c^2*/2*) times the integral of (1+|w|^2)^(-N): the Hessian-row prefactor."""
    p2 = critical_exponent(N)
    return bubble_constant(N) ** p2 / p2 * sphere_area(N) / 2 * special.beta(N / 2, N / 2)


def interaction_integrals(
    b_j: Bubble,
    b_l: Bubble | None,
    kind: InteractionKind,
    Q: WeightSpec | None = None,
    d: float = 0.25,
    *,
    s: float | None = None,
    axis: int = 0,
    domain_radius: float | None = None,
    envelope_constant: float = 1.0,
) -> Estimate:
    """Quadrature value of one interaction integral with its leading order.

    Single-bubble kinds integrate over B_d around ``b_j`` with the bubble
    projected onto a concentric ball of radius ``domain_radius`` (default 4d).
    Cross kinds integrate the unprojected bubbles over the ball centered at
    the midpoint (default radius: the separation) and return an envelope
    ``envelope_constant * sum_l lam_l^(-rate)`` as the leading term.
    """
    kind = InteractionKind(kind)
    if kind.cross:
        return _cross_interaction(b_j, b_l, kind, d, s, axis, domain_radius, envelope_constant)
    if b_l is not None and b_l is not b_j:
        same = np.array_equal(b_l.center, b_j.center) and b_l.height == b_j.height
        if not same:
            raise ValidationError(f"{kind.value} takes a single bubble (b_l must equal b_j)")
    N, lam = b_j.dimension, b_j.height
    R = _domain_radius(d, domain_radius)
    PU, dPU = _projected(N, lam, R)
    c = bubble_constant(N)
    p = critical_exponent(N) - 1
    if kind is InteractionKind.DilationWeighted:
        if Q is None:
            raise ValidationError("DilationWeighted needs Q")
        _check_peak(b_j, Q)
        a = b_j.center
        Qa = float(Q.value(a))

        def integrand(r, z):
            return (Q.value(a + z) - Qa) * (np.maximum(PU(r), 0) ** p * dPU(r))[:, None]

        value = _centered_ball_integral(N, d, lam, integrand)
        leading = -(N - 2) * c ** (p + 1) * closed_form_A(N) * float(Q.laplacian(a)) / (2 * N * lam ** 3)
        return Estimate(value, leading)
    if kind is InteractionKind.TranslationWeighted:
        if Q is None or not Q.peaks:
            raise ValidationError("TranslationWeighted needs Q with a peak")
        x = b_j.center
        a = min(Q.peaks, key=lambda q: float(np.linalg.norm(q - x)))
        Qa = float(Q.value(a))
        amp = c * (N - 2) * lam ** ((N + 2) / 2) * (1 + (lam * R) ** 2) ** (-N / 2)

        def integrand(r, z):
            rr = r[:, None]
            dU = c * (N - 2) * lam ** ((N + 2) / 2) * (1 + (lam * rr) ** 2) ** (-N / 2) * z[..., axis]
            return (Q.value(x + z) - Qa) * np.maximum(PU(rr), 0) ** p * (dU - amp * z[..., axis])

        value = _centered_ball_integral(N, d, lam, integrand)
        H = np.asarray(Q.hessian(a))
        leading = translation_constant(N) * float(H[axis] @ (x - a))
        return Estimate(value, leading)
    if s is None:
        raise ValidationError(f"{kind.value} needs the exponent s")
    if kind is InteractionKind.SubcriticalDilation:
        value = sphere_area(N) * integrate_radial(
            lambda r: r ** (N - 1) * np.maximum(PU(r), 0) ** s * dPU(r),
            0.0,
            d,
            _QSPEC,
            breakpoints=[t / lam for t in (1.0, 10.0, 100.0) if t / lam < d],
        )
        if N + s == 5:
            leading = -(c ** 2) * sphere_area(4) * math.log(lam) / lam ** 3
        else:
            g = (N - 2) * (s - 1) / 2
            leading = -(4 - (N - 2) * (s - 1)) / (2 * (s + 1)) * c ** (s + 1) * closed_form_B(N, s) * lam ** (g - 3)
        return Estimate(value, leading)
    if kind is InteractionKind.TranslationSubcritical:
        amp = c * (N - 2) * lam ** ((N + 2) / 2) * (1 + (lam * R) ** 2) ** (-N / 2)

        def integrand(r, z):
            rr = r[:, None]
            dU = c * (N - 2) * lam ** ((N + 2) / 2) * (1 + (lam * rr) ** 2) ** (-N / 2) * z[..., axis]
            return np.maximum(PU(rr), 0) ** s * (dU - amp * z[..., axis])

        value = _centered_ball_integral(N, d, lam, integrand)
        leading = envelope_constant * lam ** (-(N - 2) * (s + 1) / 2)
        return Estimate(value, leading)
    raise ValidationError(f"unsupported kind {kind}")  # pragma: no cover


def _power_derivative(N, lam, q, rho, axial, which):
    """|d/dlam U^q| or |d/dx U^q| (the latter times the given |axial| offset)."""
    a = q * (N - 2) / 2
    c = bubble_constant(N)
    t = (lam * rho) ** 2
    if which == "lam":
        return c ** q * a * lam ** (a - 1) * np.abs(1 - t) * (1 + t) ** (-a - 1)
    return 2 * a * c ** q * lam ** (a + 2) * axial * (1 + t) ** (-a - 1)


_OUTER = QuadratureSpec(rel_tol=1e-7, abs_tol=1e-300, max_subdivisions=400)
_INNER = QuadratureSpec(rel_tol=1e-9, abs_tol=1e-300, max_subdivisions=4000)


def _two_center_integral(N, h, R, g, lam_j, lam_l, split_axis_half_j=False):
    """omega_{N-1} times the integral of g(z, rho) rho^(N-2) over the meridian disk z^2+rho^2<R^2.

    Bubble j sits at z=-h and bubble l at z=+h; each half-space is integrated
    in polar coordinates about its own bubble.
    """
    om = sphere_area(N - 1)
    total = 0.0
    for z0, lam, sgn in ((-h, lam_j, 1.0), (h, lam_l, -1.0)):

        def rmax(alpha, z0=z0, sgn=sgn):
            ca = math.cos(alpha)
            rs = -z0 * ca + math.sqrt(max(z0 * z0 * ca * ca - z0 * z0 + R * R, 0.0))
            if sgn * ca > 0:
                rs = min(rs, h / (sgn * ca))
            return rs

        def outer(alpha, z0=z0, lam=lam):
            top = rmax(alpha)
            sa, ca = math.sin(alpha), math.cos(alpha)

            def inner(r):
                z = z0 + r * ca
                rho = r * sa
                return g(z, rho) * rho ** (N - 2) * r

            brk = [t / lam for t in (0.3, 1.0, 3.0, 10.0, 100.0) if t / lam < top]
            return integrate_radial(inner, 0.0, top, _INNER, breakpoints=brk)

        bps = (math.pi / 2,) if (split_axis_half_j and z0 < 0) else ()
        total += integrate_radial(outer, 0.0, math.pi, _OUTER, vectorized=False, breakpoints=bps)
    return om * total


def _cross_interaction(b_j, b_l, kind, d, s, axis, domain_radius, envelope_constant):
    if b_l is None:
        raise ValidationError("cross kinds need two bubbles")
    N = b_j.dimension
    sep_vec = b_l.center - b_j.center
    sep = float(np.linalg.norm(sep_vec))
    if sep < 4 * d:
        raise SeparationViolated(f"bubble separation {sep:g} is below 4d = {4 * d:g}")
    h = sep / 2
    R = sep if domain_radius is None else float(domain_radius)
    if R < h + d:
        raise ValidationError("cross-kind domain must contain both B_d balls")
    crit = kind in (InteractionKind.CrossDilationCritical, InteractionKind.CrossTranslationCritical)
    if not crit and s is None:
        raise ValidationError(f"{kind.value} needs the exponent s")
    q = critical_exponent(N) - 1 if crit else s
    lam_j, lam_l = b_j.height, b_l.height
    dilation = kind in (InteractionKind.CrossDilationCritical, InteractionKind.CrossDilationSubcritical)
    along = False
    if not dilation:
        e = sep_vec / sep
        k = int(np.argmax(np.abs(e)))
        if not np.isclose(abs(e[k]), 1.0, atol=1e-12):
            raise ValidationError("translation cross kinds need bubbles separated along a coordinate axis")
        along = k == axis
    # mean of |theta_1| over the unit sphere of R^(N-1)
    mean_abs = math.exp(special.gammaln((N - 1) / 2) - special.gammaln(N / 2)) / math.sqrt(math.pi)

    def g(z, rho):
        rj = np.sqrt((z + h) ** 2 + rho ** 2)
        rl = np.sqrt((z - h) ** 2 + rho ** 2)
        Ul = bubble_profile(N, lam_l, rl)
        if dilation:
            return Ul * _power_derivative(N, lam_j, q, rj, None, "lam")
        axial = np.abs(z + h) if along else mean_abs * rho
        return Ul * _power_derivative(N, lam_j, q, rj, axial, "x")

    value = _two_center_integral(N, h, R, g, lam_j, lam_l, split_axis_half_j=along)
    rate = _CROSS_RATE[kind](N)
    leading = envelope_constant * (lam_j ** (-rate) + lam_l ** (-rate))
    return Estimate(value, leading)


# ---------------------------------------------------------------------------
# convolution bound

_CONV = QuadratureSpec(rel_tol=1e-8, abs_tol=1e-300, max_subdivisions=4000)


def convolution_bound_check(N: int, theta: float, y, C: float = 1.0) -> Estimate:
    """Integral of |y-z|^(2-N) (1+|z|)^(-2-theta) dz against C (1+|y|)^(-theta).

    The envelope carries |log|y|| (at least 1) when theta = N-2. The integral
    is reduced to (r, angle) by rotational symmetry about the y-axis.
    """
    if not 0 < theta <= N - 2:
        raise ValidationError("theta must lie in (0, N-2]")
    ny = float(np.linalg.norm(np.atleast_1d(y)))
    om = sphere_area(N - 1)

    def angular(r):
        if ny == 0.0:
            return sphere_area(N) * r ** (2 - N)

        def f(gam):
            d2 = r * r + ny * ny - 2 * r * ny * np.cos(gam)
            return np.maximum(d2, 1e-300) ** ((2 - N) / 2) * np.sin(gam) ** (N - 2)

        # the kernel is sharp near gam = 0 when r is close to |y|
        width = abs(r - ny) / max(ny, r)
        bps = [w for w in (width, 10 * width) if 0 < w < math.pi]
        return om * integrate_radial(f, 0.0, math.pi, _CONV, breakpoints=bps)

    def radial(r):
        return r ** (N - 1) * (1 + r) ** (-2 - theta) * angular(r)

    bps = [ny] if ny > 0 else []
    lhs = integrate_radial(radial, 0.0, math.inf, _CONV, vectorized=False, breakpoints=bps)
    rate = (1 + ny) ** (-theta)
    if theta == N - 2:
        rate *= max(1.0, abs(math.log(ny))) if ny > 0 else 1.0
    return Estimate(lhs, C * rate)


# ---------------------------------------------------------------------------
# ratio ladders

LADDER = (100.0, 200.0, 400.0, 800.0, 1600.0)


@dataclass(frozen=True)
class Ladder:
    """Leading-order agreement of one evaluator along increasing heights.

    ``measure`` is ``ratio`` (value/leading) or, in the logarithmic cases,
    ``log_slope``: the local slope of value*lam^k against log(lam) over the
    log coefficient, which isolates the rate from the O(1) correction.
    """

    name: str
    N: int
    s: float
    lams: tuple
    values: tuple
    leadings: tuple
    measure: str
    agreement: tuple

    @property
    def errors(self) -> np.ndarray:
        return np.abs(np.asarray(self.agreement) - 1.0)

    def decreasing(self) -> bool:
        e = self.errors
        return bool(np.all(np.diff(e) < 0))

    def rows(self) -> list[dict]:
        return [
            {"lemma": self.name, "N": self.N, "s": self.s, "lambda": l, "value": v, "leading": ld,
             "measure": self.measure, "agreement": a, "error": abs(a - 1.0)}
            for l, v, ld, a in zip(self.lams, self.values, self.leadings, self.agreement)
        ]


def _ratio_ladder(name, N, s, lams, est):
    E = [est(l) for l in lams]
    return Ladder(name, N, s, tuple(lams), tuple(e.value for e in E), tuple(e.leading for e in E),
                  "ratio", tuple(e.ratio for e in E))


def _log_ladder(name, N, s, lams, est, power, coef):
    """Slopes of value*lam^power vs log(lam), each over the interval ending at the rung."""
    grid = (lams[0] / 2,) + tuple(lams)
    E = [est(l) for l in grid]
    y = [e.value * l ** power / coef for e, l in zip(E, grid)]
    slopes = [(y[k] - y[k - 1]) / math.log(grid[k] / grid[k - 1]) for k in range(1, len(grid))]
    return Ladder(name, N, s, tuple(lams), tuple(e.value for e in E[1:]), tuple(e.leading for e in E[1:]),
                  "log_slope", tuple(slopes))


def lemma_ladders(N: int, s: float, d: float = 0.5, lams=LADDER, offset: float = 0.01) -> list[Ladder]:
    """Every evaluator with a leading-order prediction, on Q = 1 - |x|^2 with the peak at 0.

    Logarithmic cases (N + s = 5) use d = 1 so the log term dominates early.
    """
    check_exponent(N, s)
    if N < 4:
        raise ValidationError("ratio ladders need N >= 4")
    Q = WeightSpec.standard(N)
    c = bubble_constant(N)
    lams = tuple(float(l) for l in lams)
    log_case = N + s == 5
    dl = 1.0 if log_case else d
    x = np.zeros(N)
    x[0] = offset
    out = [
        _ratio_ladder("mass_dilation", N, s, lams, lambda l: weighted_mass_dilation(Bubble.centered(N, l), Q, d)),
        _ratio_ladder("DilationWeighted", N, s, lams,
                      lambda l: interaction_integrals(Bubble.centered(N, l), None, InteractionKind.DilationWeighted, Q, d)),
        _ratio_ladder("TranslationWeighted", N, s, lams,
                      lambda l: interaction_integrals(Bubble(x, l, N), None, InteractionKind.TranslationWeighted, Q, d)),
    ]
    mass = lambda l: bubble_power_mass(Bubble.centered(N, l), s, dl)
    sub = lambda l: interaction_integrals(Bubble.centered(N, l), None, InteractionKind.SubcriticalDilation, None, dl, s=s)
    if log_case:
        w4 = sphere_area(4)
        out.append(_log_ladder("power_mass", N, s, lams, mass, 2, c * c * w4))
        out.append(_log_ladder("SubcriticalDilation", N, s, lams, sub, 3, -c * c * w4))
    else:
        out.append(_ratio_ladder("power_mass", N, s, lams, mass))
        out.append(_ratio_ladder("SubcriticalDilation", N, s, lams, sub))
    return out
