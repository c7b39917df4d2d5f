"""Shared numerical substrate: quadrature, banded solves, Newton, box search."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import linalg, special

from .errors import (
    DivergentTail,
    NonConvergence,
    SingularJacobian,
    ValidationError,
)

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_subdivisions: int = 4000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValidationError("rel_tol must be positive")
        if not self.abs_tol >= 0:
            raise ValidationError("abs_tol must be nonnegative")
        if self.max_subdivisions < 1:
            raise ValidationError("max_subdivisions must be at least 1")


@dataclass(frozen=True)
class NewtonConfig:
    max_iters: int = 50
    residual_tol: float = 1e-12
    damping_min: float = 1.0 / 1024

    def __post_init__(self):
        if not self.residual_tol > 0:
            raise ValidationError("residual_tol must be positive")
        if not 0 < self.damping_min <= 1:
            raise ValidationError("damping_min must lie in (0, 1]")
        if self.max_iters < 0:
            raise ValidationError("max_iters must be nonnegative")


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float)).copy()
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float)).copy()
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValidationError("box bounds must be vectors of equal length")
        if not np.all(lo < hi):
            raise ValidationError("box requires lower < upper in every coordinate")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, x, slack: float = 0.0) -> bool:
        x = np.atleast_1d(x)
        return bool(np.all(x >= self.lower - slack) and np.all(x <= self.upper + slack))


# ---------------------------------------------------------------------------
# adaptive Gauss-Kronrod quadrature (vectorized over subintervals)

_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG7 = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG = np.zeros(15)
_WG[1:7:2] = _WG7[:3]
_WG[7] = _WG7[3]
_WG[9:15:2] = _WG7[2::-1]


def _gk15(f, a, b):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c[:, None] + h[:, None] * _NODES[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    if not np.all(np.isfinite(fx)):
        raise NonConvergence("integrand returned a non-finite value")
    k = h * (fx @ _WK)
    g = h * (fx @ _WG)
    mean = (fx @ _WK) * 0.5
    resasc = np.abs(h) * (np.abs(fx - mean[:, None]) @ _WK)
    resabs = np.abs(h) * (np.abs(fx) @ _WK)
    err = np.abs(k - g)
    mask = (resasc != 0) & (err != 0)
    err[mask] = resasc[mask] * np.minimum(1.0, (200.0 * err[mask] / resasc[mask]) ** 1.5)
    err = np.maximum(err, 50 * _EPS * resabs)
    return k, err


def _adaptive(f, edges, spec: QuadratureSpec):
    a = np.asarray(edges[:-1], dtype=float)
    b = np.asarray(edges[1:], dtype=float)
    vals, errs = _gk15(f, a, b)
    while True:
        total = vals.sum()
        tol = max(spec.rel_tol * abs(total), spec.abs_tol)
        err_total = errs.sum()
        if err_total <= tol:
            return total, err_total, a, b, errs
        splittable = np.abs(b - a) > 64 * _EPS * np.maximum(np.abs(a), np.abs(b))
        sel = (errs > tol / len(errs)) & splittable
        if not sel.any():
            sel = (errs >= errs[splittable].max()) & splittable if splittable.any() else sel
        if not sel.any() or len(errs) + sel.sum() > spec.max_subdivisions:
            raise _Exhausted(total, err_total, a, b, errs)
        mid = 0.5 * (a[sel] + b[sel])
        na = np.concatenate([a[sel], mid])
        nb = np.concatenate([mid, b[sel]])
        nv, ne = _gk15(f, na, nb)
        keep = ~sel
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        vals = np.concatenate([vals[keep], nv])
        errs = np.concatenate([errs[keep], ne])


class _Exhausted(Exception):
    def __init__(self, total, err, a, b, errs):
        super().__init__()
        self.total, self.err, self.a, self.b, self.errs = total, err, a, b, errs


def integrate_radial(
    f: Callable[[np.ndarray], np.ndarray],
    r0: float,
    r1: float,
    spec: QuadratureSpec = QuadratureSpec(),
    *,
    breakpoints: Sequence[float] = (),
    vectorized: bool = True,
    full_output: bool = False,
):
    """Integrate ``f`` over ``[r0, r1]``; ``r1`` may be ``inf``.

    ``f`` receives a 1-D array of abscissae unless ``vectorized`` is false.
    Infinite ranges are mapped onto ``[0, 1)`` by ``r = r0 + t/(1-t)``.
    With ``full_output`` the pair ``(value, error_bound)`` is returned.
    """
    if not vectorized:
        scalar_f = f
        f = lambda r: np.array([scalar_f(float(ri)) for ri in r])  # noqa: E731
    if not (math.isfinite(r0) and r1 > r0):
        if r1 == r0:
            return (0.0, 0.0) if full_output else 0.0
        raise ValidationError("integration range must satisfy finite r0 < r1")
    bps = sorted(p for p in breakpoints if r0 < p < r1)
    if math.isinf(r1):
        _check_tail(f, r0, spec)

        def g(t):
            s = 1.0 - t
            return f(r0 + t / s) / (s * s)

        edges = [0.0] + [(p - r0) / (1.0 + p - r0) for p in bps] + [1.0]
        integrand = g
    else:
        edges = [r0] + bps + [r1]
        integrand = f
    try:
        value, err, *_ = _adaptive(integrand, edges, spec)
    except _Exhausted as ex:
        worst = int(np.argmax(ex.errs))
        if math.isinf(r1) and ex.b[worst] > 1.0 - 1e-3:
            raise DivergentTail(f"tail contribution does not shrink (estimate {ex.total:.3e})") from None
        raise NonConvergence(
            f"quadrature did not reach tolerance: error {ex.err:.3e} on value {ex.total:.3e}"
        ) from None
    return (float(value), float(err)) if full_output else float(value)


def _check_tail(f, r0, spec):
    probe = r0 + np.array([1e6, 1e8])
    with np.errstate(all="ignore"):
        h = np.abs(np.asarray(f(probe), dtype=float)) * probe
    if not np.all(np.isfinite(h)):
        raise DivergentTail("integrand is not finite far out")
    if h[0] > spec.abs_tol and h[1] >= 0.999 * h[0]:
        raise DivergentTail("integrand decays no faster than 1/r")


@lru_cache(maxsize=64)
def gauss_legendre_unit(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


# ---------------------------------------------------------------------------
# sphere quadrature

def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere in R^N."""
    return 2.0 * math.pi ** (N / 2) / special.gamma(N / 2)


@lru_cache(maxsize=64)
def sphere_rule(N: int, degree: int = 5) -> tuple[np.ndarray, np.ndarray]:
    """Points on the unit sphere of R^N with weights summing to its area.

    Degree <= 5 uses the symmetric 2N^2-point rule with nodes ``±e_i`` and
    ``(±e_i ± e_j)/sqrt 2``; higher degrees use a product Gauss rule on the
    hyperspherical angles. Both integrate polynomials up to ``degree`` exactly.
    """
    if N < 2:
        raise ValidationError("sphere rules need N >= 2")
    area = sphere_area(N)
    if degree <= 5 and N >= 2:
        pts, wts = [], []
        w1 = (4.0 - N) / (2.0 * N * (N + 2.0))
        w2 = 1.0 / (N * (N + 2.0))
        eye = np.eye(N)
        for i in range(N):
            for sgn in (1.0, -1.0):
                pts.append(sgn * eye[i])
                wts.append(w1)
        r2 = 1.0 / math.sqrt(2.0)
        for i, j in itertools.combinations(range(N), 2):
            for si, sj in itertools.product((1.0, -1.0), repeat=2):
                pts.append(r2 * (si * eye[i] + sj * eye[j]))
                wts.append(w2)
        P = np.array(pts)
        W = np.array(wts) * area
    else:
        n = max(1, (degree + 2) // 2)
        angle_sets = []
        for k in range(1, N - 1):
            m = N - 1 - k
            alpha = (m - 1) / 2.0
            t, w = special.roots_jacobi(n, alpha, alpha)
            angle_sets.append((t, w))
        nphi = 2 * n
        phi = 2.0 * math.pi * (np.arange(nphi) + 0.5) / nphi
        wphi = np.full(nphi, 2.0 * math.pi / nphi)
        grids = [np.arange(n)] * (N - 2) + [np.arange(nphi)]
        idx = np.array(np.meshgrid(*grids, indexing="ij")).reshape(N - 1, -1).T
        P = np.zeros((idx.shape[0], N))
        W = np.ones(idx.shape[0])
        sin_prod = np.ones(idx.shape[0])
        for k, (t, w) in enumerate(angle_sets):
            tk = t[idx[:, k]]
            P[:, k] = sin_prod * tk
            sin_prod = sin_prod * np.sqrt(np.maximum(0.0, 1.0 - tk * tk))
            W *= w[idx[:, k]]
        ph = phi[idx[:, -1]]
        P[:, N - 2] = sin_prod * np.cos(ph)
        P[:, N - 1] = sin_prod * np.sin(ph)
        W *= wphi[idx[:, -1]]
    P.flags.writeable = False
    W.flags.writeable = False
    return P, W


# ---------------------------------------------------------------------------
# linear algebra

@dataclass(frozen=True)
class TridiagonalMatrix:
    """Tridiagonal matrix stored by its three diagonals."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        n = len(self.diag)
        if len(self.lower) != n - 1 or len(self.upper) != n - 1:
            raise ValidationError("off-diagonals must have length n-1")

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.diag), len(self.diag))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[:-1] += self.upper * x[1:]
        y[1:] += self.lower * x[:-1]
        return y

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.upper, 1) + np.diag(self.lower, -1)

    def solve(self, b: np.ndarray) -> np.ndarray:
        n = len(self.diag)
        ab = np.zeros((3, n))
        ab[0, 1:] = self.upper
        ab[1] = self.diag
        ab[2, :-1] = self.lower
        try:
            x = linalg.solve_banded((1, 1), ab, b, check_finite=True)
        except (linalg.LinAlgError, ValueError) as ex:
            raise SingularJacobian(str(ex)) from None
        if not np.all(np.isfinite(x)):
            raise SingularJacobian("tridiagonal solve produced non-finite values")
        return x


def _linear_solve(J, rhs: np.ndarray) -> np.ndarray:
    if hasattr(J, "solve"):
        return J.solve(rhs)
    J = np.atleast_2d(np.asarray(J, dtype=float))
    try:
        x = np.linalg.solve(J, rhs)
    except np.linalg.LinAlgError as ex:
        raise SingularJacobian(str(ex)) from None
    if not np.all(np.isfinite(x)):
        raise SingularJacobian("linear solve produced non-finite values")
    return x


def fd_jacobian(F: Callable, x: np.ndarray) -> np.ndarray:
    """Centered finite-difference Jacobian, step eps^(1/3) * max(|x_j|, 1)."""
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        h = _EPS ** (1.0 / 3.0) * max(abs(x[j]), 1.0)
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        cols.append((np.atleast_1d(F(xp)) - np.atleast_1d(F(xm))) / (xp[j] - xm[j]))
    return np.column_stack(cols)


@dataclass
class NewtonInfo:
    iterations: int
    residual: float
    history: list = field(default_factory=list)


def newton_solve(
    F: Callable,
    x0,
    J: Callable | None = None,
    cfg: NewtonConfig = NewtonConfig(),
    *,
    norm: Callable | None = None,
    full_output: bool = False,
):
    """Damped Newton iteration until ``norm(F(x)) <= cfg.residual_tol``.

    ``J(x)`` may return a dense array or any object with a ``solve`` method.
    ``norm(Fx, x)`` defaults to the max-norm of ``Fx``.
    """
    scalar = np.ndim(x0) == 0
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()

    def Fv(z):
        return np.atleast_1d(np.asarray(F(z[0] if scalar else z), dtype=float))

    def Jv(z):
        if J is None:
            return fd_jacobian(Fv, z)
        out = J(z[0] if scalar else z)
        return out if hasattr(out, "solve") else np.atleast_2d(np.asarray(out, dtype=float))

    measure = norm or (lambda fx, _x: float(np.max(np.abs(fx))) if fx.size else 0.0)
    fx = Fv(x)
    r = measure(fx, x)
    history = [r]
    it = 0
    while True:
        if not math.isfinite(r):
            raise NonConvergence("residual is not finite")
        if r <= cfg.residual_tol:
            break
        if it >= cfg.max_iters:
            raise NonConvergence(f"Newton stalled at residual {r:.3e} after {it} iterations")
        step = _linear_solve(Jv(x), -fx)
        alpha = 1.0
        while True:
            xn = x + alpha * step
            fn = Fv(xn)
            rn = measure(fn, xn)
            if math.isfinite(rn) and rn <= (1.0 - 1e-4 * alpha) * r:
                break
            if alpha * 0.5 < cfg.damping_min:
                if not math.isfinite(rn):
                    raise NonConvergence("damped step left the domain of F")
                break
            alpha *= 0.5
        x, fx, r = xn, fn, rn
        it += 1
        history.append(r)
    out = x[0] if scalar else x
    if full_output:
        return out, NewtonInfo(iterations=it, residual=r, history=history)
    return out


# ---------------------------------------------------------------------------
# Poincare-Miranda box search

@dataclass(frozen=True)
class NoSignChange:
    component: int
    box: Box


@dataclass(frozen=True)
class RootBox:
    box: Box
    depth: int
    orientation: tuple
    complete: bool


def _face_offsets(k: int) -> np.ndarray:
    """Sample offsets in [-1, 1]^(k-1) used on each face."""
    if k == 1:
        return np.zeros((1, 0))
    pts = [np.zeros(k - 1)]
    for j in range(k - 1):
        for t in (-1.0, -0.5, 0.5, 1.0):
            e = np.zeros(k - 1)
            e[j] = t
            pts.append(e)
    if k <= 4:
        pts.extend(np.array(c) for c in itertools.product((-1.0, 1.0), repeat=k - 1))
    return np.array(pts)


def face_values(F: Callable, box: Box, i: int, vectorized: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Values of component ``i`` at sample points of the two faces normal to axis ``i``.

    With ``vectorized`` F maps an (n, k) array of points to an (n, k) array.
    """
    k = box.dim
    offs = _face_offsets(k)
    others = [j for j in range(k) if j != i]
    c, hw = box.center, 0.5 * box.width
    pts = np.tile(c, (offs.shape[0], 1))
    pts[:, others] = c[others] + offs * hw[others]
    lo_pts, hi_pts = pts.copy(), pts
    lo_pts[:, i] = box.lower[i]
    hi_pts[:, i] = box.upper[i]
    if vectorized:
        both = np.asarray(F(np.vstack([lo_pts, hi_pts])))
        n = offs.shape[0]
        return both[:n, i], both[n:, i]
    lo_vals = np.array([np.atleast_1d(F(x))[i] for x in lo_pts])
    hi_vals = np.array([np.atleast_1d(F(x))[i] for x in hi_pts])
    return lo_vals, hi_vals


def _orientation(F, box: Box, vectorized: bool = False) -> tuple[int, ...] | int:
    """Sign pattern per component, or the index of the first failing component."""
    orient = []
    for i in range(box.dim):
        lo, hi = face_values(F, box, i, vectorized)
        if np.all(lo <= 0) and np.all(hi >= 0):
            orient.append(1)
        elif np.all(lo >= 0) and np.all(hi <= 0):
            orient.append(-1)
        else:
            return i
    return tuple(orient)


def miranda_search(
    F: Callable, box: Box, refinement_depth: int, vectorized: bool = False
) -> RootBox | NoSignChange:
    """Search ``box`` for the Poincare-Miranda sign configuration, then bisect.

    Each component ``F_i`` must have opposite (weak) signs on the two faces
    normal to axis ``i``. Bisection splits the edge that is longest relative
    to its initial width and keeps a child on which the condition persists.
    ``complete`` is false when neither child passed before the target width.
    """
    orient = _orientation(F, box, vectorized)
    if isinstance(orient, int):
        return NoSignChange(component=orient, box=box)
    w0 = box.width
    target = 2.0 ** (-refinement_depth)
    current = box
    splits = 0
    max_splits = refinement_depth * box.dim
    while splits < max_splits:
        rel = current.width / w0
        if np.all(rel <= target * (1 + 1e-12)):
            break
        i = int(np.argmax(rel))
        mid = current.center[i]
        lo_hi = current.upper.copy()
        lo_hi[i] = mid
        hi_lo = current.lower.copy()
        hi_lo[i] = mid
        children = (Box(current.lower, lo_hi), Box(hi_lo, current.upper))
        chosen = None
        for child in children:
            if not isinstance(_orientation(F, child, vectorized), int):
                chosen = child
                break
        if chosen is None:
            return RootBox(current, splits // box.dim, orient, False)
        current = chosen
        splits += 1
    depth = int(round(-math.log2(float(np.max(current.width / w0)))))
    return RootBox(current, depth, orient, True)
