"""Radial solutions of -u'' - (N-1)u'/r = Q(r) u^(2*-1) + eps u^s on (0, R).

The operator is discretized by cell-vertex finite volumes on the graded grid
r_i = R (i/M)^gamma: node i owns the shell between the neighbouring midpoints
and fluxes carry the weight r^(N-1). At r = 0 this reduces to -2N(u_1-u_0)/h^2,
the discrete form of -N u''(0). The Jacobian is tridiagonal.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import interpolate, optimize, stats

from .asymptotics import ConstantsTable
from .errors import (
    InitialSolveFailed,
    NonConvergence,
    NumericalError,
    PeakUnresolved,
    ResolutionLost,
    SingularJacobian,
    SolveFailed,
    ValidationError,
)
from .kernel import bubble_constant, bubble_profile, critical_exponent
from .numerics import NewtonConfig, TridiagonalMatrix, gauss_legendre_unit, sphere_area
from .reduced import (
    Normalization,
    PeakData,
    ReducedProblem,
    Regime,
    balance_prefactor,
    classify,
    gap_exponent,
)
from .weights import WeightSpec


def graded_grid(R: float, M: int, gamma: float = 2.0) -> np.ndarray:
    if M < 4:
        raise ValidationError("grid needs at least 4 intervals")
    r = R * (np.arange(M + 1) / M) ** gamma
    r[-1] = R
    return r


def sinh_grid(R: float, M: int, beta: float = 30.0) -> np.ndarray:
    """r_i = R sinh(beta i/M)/sinh(beta): uniform for r << R e^-beta, geometric (ratio e^(beta/M)) above.

    On the geometric part the discrete operator commutes with r -> e^(beta/M) r, so
    discretization error does not depend on the peak scale there.
    """
    if M < 4:
        raise ValidationError("grid needs at least 4 intervals")
    if not beta > 0:
        raise ValidationError("beta must be positive")
    r = R * np.sinh(beta * np.arange(M + 1) / M) / math.sinh(beta)
    r[-1] = R
    return r


def make_grid(R: float, M: int, kind: str = "sinh", param: float | None = None) -> np.ndarray:
    if kind == "sinh":
        return sinh_grid(R, M, 30.0 if param is None else param)
    if kind == "power":
        return graded_grid(R, M, 2.0 if param is None else param)
    raise ValidationError(f"unknown grid kind {kind!r}")


@dataclass(frozen=True, eq=False)
class RadialProblem:
    N: int
    s: float
    R: float
    q: Callable
    grid: np.ndarray
    weight: WeightSpec | None = None
    grid_kind: tuple | None = None

    def __post_init__(self):
        if self.N < 3:
            raise ValidationError("N must be at least 3")
        if not 1.0 <= self.s < (self.N + 2) / (self.N - 2):
            raise ValidationError("s must lie in [1, 2*-1)")
        r = np.asarray(self.grid, dtype=float)
        if r[0] != 0.0 or not np.isclose(r[-1], self.R) or np.any(np.diff(r) <= 0):
            raise ValidationError("grid must increase strictly from 0 to R")
        h = np.diff(r)
        if h[0] > h[-1] * (1 + 1e-12):
            raise ValidationError("grid must be graded toward the origin")
        qv = np.asarray(self.q(r), dtype=float)
        if qv[0] <= 0 or np.any(qv < 0):
            raise ValidationError("Q must be nonnegative on [0, R] with Q(0) > 0")
        object.__setattr__(self, "grid", r)

    @classmethod
    def standard(
        cls,
        N: int,
        s: float,
        M: int = 1600,
        R: float = 1.0,
        Q: WeightSpec | None = None,
        grid: str = "sinh",
        grid_param: float | None = None,
    ) -> "RadialProblem":
        """Problem on B_R with Q = 1 - |x|^2 unless another radial weight is given."""
        Q = WeightSpec.standard(N) if Q is None else Q
        if Q.radial_profile is None:
            raise ValidationError("the weight must be radially symmetric about the origin")
        return cls(N, float(s), float(R), Q.radial_profile, make_grid(R, M, grid, grid_param), Q, (grid, grid_param))

    def refined(self, factor: int = 2) -> "RadialProblem":
        """Same problem with ``factor`` times as many intervals of the same grid family."""
        if self.grid_kind is None:
            raise ValidationError("refinement needs a named grid family")
        kind, param = self.grid_kind
        fine = make_grid(self.R, self.M * factor, kind, param)
        return RadialProblem(self.N, self.s, self.R, self.q, fine, self.weight, self.grid_kind)

    @property
    def M(self) -> int:
        return self.grid.size - 1

    @property
    def p(self) -> float:
        return (self.N + 2) / (self.N - 2)

    @cached_property
    def qvals(self) -> np.ndarray:
        return np.asarray(self.q(self.grid), dtype=float)

    @cached_property
    def _fv(self):
        r, N = self.grid, self.N
        h = np.diff(r)
        mid = 0.5 * (r[:-1] + r[1:])
        edges = np.concatenate([[0.0], mid, [r[-1]]])
        vol = (edges[1:] ** N - edges[:-1] ** N) / N  # shell volume / omega_N
        cond = mid ** (N - 1) / h  # flux coefficient between nodes i and i+1
        return h, mid, vol, cond

    @cached_property
    def laplacian(self) -> TridiagonalMatrix:
        """Discrete -Delta on nodes 0..M-1 with u_M = 0."""
        _, _, vol, cond = self._fv
        n = self.M
        diag = np.empty(n)
        diag[0] = cond[0]
        diag[1:] = cond[:n - 1] + cond[1:n]
        diag = diag / vol[:n]
        upper = -cond[:n - 1] / vol[:n - 1]
        lower = -cond[:n - 1] / vol[1:n]
        return TridiagonalMatrix(lower, diag, upper)

    def apply_laplacian(self, u: np.ndarray) -> np.ndarray:
        """-Delta_h u in flux form (differences first), u given on nodes 0..M-1."""
        _, _, vol, cond = self._fv
        full = np.append(u, 0.0)
        flux = cond * np.diff(full)
        out = -flux.copy()
        out[1:] += flux[:-1]
        return out / vol[: u.size]

    @property
    def volumes(self) -> np.ndarray:
        return self._fv[2]


def _pos_pow(u, e):
    up = np.maximum(u, 0.0)
    if e == 0:
        return np.where(u > 0, 1.0, 0.0)
    return up ** e


def nonlinearity(p: RadialProblem, u: np.ndarray, eps: float, q=None):
    """f(u) = Q u_+^p + eps u_+^s and its derivative (zero where u <= 0)."""
    q = p.qvals[: u.size] if q is None else q
    f = q * _pos_pow(u, p.p) + eps * _pos_pow(u, p.s)
    df = p.p * q * _pos_pow(u, p.p - 1) + eps * p.s * _pos_pow(u, p.s - 1)
    df = np.where(u > 0, df, 0.0)
    return f, df


def _interior(p: RadialProblem, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.size == p.M + 1:
        return u[:-1]
    if u.size != p.M:
        raise ValidationError("u must have M or M+1 entries")
    return u


def assemble_residual(p: RadialProblem, u, eps: float, source: np.ndarray | None = None):
    """Residual F = -Delta_h u - f(u) (- source) and its exact tridiagonal Jacobian."""
    u = _interior(p, u)
    L = p.laplacian
    f, df = nonlinearity(p, u, eps)
    F = p.apply_laplacian(u) - f
    if source is not None:
        F = F - source[: u.size]
    J = TridiagonalMatrix(L.lower, L.diag - df, L.upper)
    return F, J


def _abs_laplacian(p: RadialProblem) -> TridiagonalMatrix:
    L = p.laplacian
    return TridiagonalMatrix(np.abs(L.lower), np.abs(L.diag), np.abs(L.upper))


def residual_weights(p: RadialProblem, u, eps: float, source=None) -> np.ndarray:
    """(|L||u| + |f(u)| + |source|)_i, the natural size of row i of the residual."""
    u = _interior(p, u)
    f, _ = nonlinearity(p, u, eps)
    w = _abs_laplacian(p).matvec(np.abs(u)) + np.abs(f)
    if source is not None:
        w = w + np.abs(source[: u.size])
    return w


def backward_error(F: np.ndarray, weights: np.ndarray) -> float:
    """Componentwise relative residual max_i |F_i| / w_i (rows with w_i = 0 must vanish)."""
    tiny = np.finfo(float).tiny
    return float(np.max(np.abs(F) / np.maximum(weights, tiny)))


def relative_residual(p: RadialProblem, u, eps: float, source=None) -> float:
    F, _ = assemble_residual(p, u, eps, source)
    return backward_error(F, residual_weights(p, u, eps, source))


def discrete_first_eigenvalue(p: RadialProblem, tol: float = 1e-13, max_iters: int = 500) -> float:
    """Smallest eigenvalue of the discrete Dirichlet operator by inverse iteration.

    Rayleigh quotients use the shell-volume inner product in which the operator is
    symmetric. Dense symmetric solvers lose absolute accuracy here because the
    diagonal grows like 1/h_0^2 at the origin.
    """
    L = p.laplacian
    vol = p.volumes[: p.M]
    x = np.ones(p.M)
    lam_old = math.inf
    for _ in range(max_iters):
        y = L.solve(x)
        y /= math.sqrt(np.dot(y * vol, y))
        lam = float(np.dot(y * vol, p.apply_laplacian(y)))
        if abs(lam - lam_old) <= tol * abs(lam):
            return lam
        x, lam_old = y, lam
    raise NonConvergence("inverse iteration did not converge")


@dataclass(frozen=True, eq=False)
class RadialSolution:
    grid: np.ndarray
    values: np.ndarray
    eps: float
    N: int
    newton_residual: float
    newton_iters: int = 0
    negative_overshoot: float = 0.0

    @property
    def peak_height(self) -> float:
        return float(self.values[0])

    @property
    def extracted_lambda(self) -> float:
        return self.peak_height ** (2.0 / (self.N - 2))

    def half_height_nodes(self) -> int:
        return int(np.count_nonzero(self.values >= 0.5 * self.peak_height))

    def spline(self) -> interpolate.CubicSpline:
        return interpolate.CubicSpline(self.grid, self.values, bc_type=((1, 0.0), "not-a-knot"))


def _finish(p: RadialProblem, x: np.ndarray, eps: float, info, source=None) -> RadialSolution:
    scale = max(float(np.max(np.abs(x))), 1e-300)
    overshoot = max(0.0, -float(np.min(x))) / scale
    u = np.append(np.maximum(x, 0.0), 0.0)
    res = relative_residual(p, u, eps, source)
    return RadialSolution(p.grid, u, eps, p.N, res, info.iterations, overshoot)


_ROUNDOFF = 1e3 * np.finfo(float).eps


def solve_radial(
    p: RadialProblem,
    eps: float,
    guess,
    cfg: NewtonConfig = NewtonConfig(max_iters=100, residual_tol=1e-10, damping_min=1.0 / 1024),
    *,
    source: np.ndarray | None = None,
    step_tol: float = 1e-10,
) -> RadialSolution:
    """Damped Newton from ``guess``.

    Steps are backtracked on the volume-weighted L2 norm of the residual. The
    iteration stops once the componentwise backward error is at most
    ``cfg.residual_tol`` and the last step is below ``step_tol`` relative to u,
    or once the merit stalls with the backward error at roundoff level.
    """
    x = _interior(p, guess).copy()
    sq_vol = np.sqrt(p.volumes[: p.M])

    def merit(F):
        return float(np.linalg.norm(F * sq_vol))

    F, J = assemble_residual(p, x, eps, source)
    m = merit(F)
    small_step = stalled = False
    for it in range(cfg.max_iters + 1):
        be = backward_error(F, residual_weights(p, x, eps, source))
        if not math.isfinite(be):
            raise NonConvergence("residual is not finite")
        if be <= cfg.residual_tol and (small_step or (stalled and be <= _ROUNDOFF) or m == 0.0):
            return _finish(p, x, eps, _Info(it), source)
        if it == cfg.max_iters:
            break
        step = J.solve(-F)
        alpha = 1.0
        while True:
            xn = x + alpha * step
            Fn, Jn = assemble_residual(p, xn, eps, source)
            mn = merit(Fn)
            if math.isfinite(mn) and mn <= (1.0 - 1e-4 * alpha) * m:
                break
            if alpha * 0.5 < cfg.damping_min:
                break
            alpha *= 0.5
        small_step = alpha * float(np.max(np.abs(step))) <= step_tol * max(float(np.max(np.abs(xn))), 1e-300)
        # Near-dilation invariance makes the backward error a poor proxy for the error:
        # it can sit below tolerance while the step is still 1e-4 of u. Only a stall at
        # the floating-point floor is accepted without a small step.
        stalled = mn > 0.5 * m
        x, F, J, m = xn, Fn, Jn, mn
    raise NonConvergence(f"Newton stalled at backward error {be:.3e} after {cfg.max_iters} iterations")


@dataclass(frozen=True)
class _Info:
    iterations: int


def bubble_ansatz(p: RadialProblem, lam_b: float) -> np.ndarray:
    """Q(0)^{-(N-2)/4} PU_{0,lam_b} on the grid (PU vanishes at r = R)."""
    N = p.N
    U = bubble_profile(N, lam_b, p.grid) - bubble_profile(N, lam_b, p.R)
    return p.qvals[0] ** (-(N - 2) / 4) * U


def bubble_lambda_for_height(p: RadialProblem, u0: float) -> float:
    """Solve Q(0)^{-(N-2)/4} PU_{0,lam}(0) = u0 for lam (monotone in lam)."""
    N, R = p.N, p.R
    c = p.qvals[0] ** (-(N - 2) / 4)

    def g(lam):
        return c * (bubble_profile(N, lam, 0.0) - bubble_profile(N, lam, R)) - u0

    guess = (u0 / (c * bubble_constant(N))) ** (2 / (N - 2))
    lo, hi = max(guess / 4, 1e-8), guess * 4 + 4 / R
    while g(lo) > 0:
        lo /= 4
    while g(hi) < 0:
        hi *= 4
    return optimize.brentq(g, lo, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps, maxiter=500)


# ---------------------------------------------------------------------------
# structure extraction

@dataclass(frozen=True)
class Structure:
    lam: float
    lam_bubble: float
    w_norm_rel: float
    mass_ratio: float


def gradient_energy(grid: np.ndarray, u: np.ndarray, N: int, upto: float | None = None) -> float:
    """omega_N * sum over cells of r_mid^(N-1) (du)^2 / h, optionally restricted to r <= upto."""
    h = np.diff(grid)
    mid = 0.5 * (grid[:-1] + grid[1:])
    cell = mid ** (N - 1) * np.diff(u) ** 2 / h
    if upto is not None:
        frac = np.clip((upto - grid[:-1]) / h, 0.0, 1.0)
        cell = cell * frac
    return sphere_area(N) * float(np.sum(cell))


def extract_structure(
    sol: RadialSolution, constants: ConstantsTable | None = None, p: RadialProblem | None = None, mass_radius: float = 0.2
) -> Structure:
    """lam = u(0)^{2/(N-2)} and the relative H^1 size of w = u - Q(0)^{-(N-2)/4} PU.

    The bubble parameter in PU is fixed by matching u(0) exactly.
    """
    if constants is not None and constants.N != sol.N:
        raise ValidationError("constants table has the wrong dimension")
    if sol.half_height_nodes() < 8:
        raise PeakUnresolved(f"only {sol.half_height_nodes()} nodes under the half-height radius")
    if p is None:
        p = RadialProblem.standard(sol.N, 1.0, sol.grid.size - 1)
        p = RadialProblem(sol.N, 1.0, float(sol.grid[-1]), p.q, sol.grid, p.weight)
    lam_b = bubble_lambda_for_height(p, sol.peak_height)
    w = sol.values - bubble_ansatz(p, lam_b)
    eu = gradient_energy(sol.grid, sol.values, sol.N)
    ew = gradient_energy(sol.grid, w, sol.N)
    mass = gradient_energy(sol.grid, sol.values, sol.N, upto=mass_radius) / eu
    return Structure(sol.extracted_lambda, lam_b, math.sqrt(ew / eu), mass)


# ---------------------------------------------------------------------------
# continuation

@dataclass(frozen=True)
class BranchPoint:
    eps: float
    solution: RadialSolution
    w_rel: float
    lam_bubble: float
    mass_ratio: float
    pohozaev_residual: float = math.nan

    @property
    def u0(self) -> float:
        return self.solution.peak_height

    @property
    def lam(self) -> float:
        return self.solution.extracted_lambda

    @property
    def newton_iters(self) -> int:
        return self.solution.newton_iters


@dataclass(frozen=True)
class ScalingFit:
    kind: str  # "power" (slope of log lam vs log eps) or "exp" (slope of log lam vs 1/eps)
    slope: float
    ci_low: float
    ci_high: float
    npoints: int
    drift_per_decade: float = math.nan


@dataclass
class Branch:
    N: int
    s: float
    points: list = field(default_factory=list)
    stop_reason: str = ""
    stop_eps: float = math.nan

    @property
    def eps(self) -> np.ndarray:
        return np.array([pt.eps for pt in self.points])

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([pt.lam for pt in self.points])

    def tail(self, decades: float = 1.0) -> list:
        if not self.points:
            return []
        end = self.points[-1].eps
        return [pt for pt in self.points if pt.eps <= end * 10 ** decades * (1 + 1e-9)]

    def fit(self, decades: float = 1.0) -> ScalingFit:
        """Least squares over the last ``decades`` of eps, with a 95% t-interval."""
        pts = self.tail(decades)
        if len(pts) < 3:
            raise NumericalError("need at least 3 branch points to fit")
        e = np.array([pt.eps for pt in pts])
        loglam = np.log([pt.lam for pt in pts])
        if classify(self.N, self.s) is Regime.ExpLaw:
            x, kind = 1.0 / e, "exp"
        else:
            x, kind = np.log(e), "power"
        res = stats.linregress(x, loglam)
        tq = stats.t.ppf(0.975, len(pts) - 2)
        drift = math.nan
        if kind == "exp":
            prod = e * loglam
            d = stats.linregress(np.log10(e), prod)
            drift = abs(d.slope) / float(np.mean(prod))
        return ScalingFit(kind, res.slope, res.slope - tq * res.stderr, res.slope + tq * res.stderr, len(pts), drift)


def height_ratio(p: RadialProblem, eps_from: float, eps_to: float) -> float:
    """Predicted lam(eps_to)/lam(eps_from) from the reduced height balance."""
    regime = classify(p.N, p.s) if p.N >= 4 else Regime.PowerLaw
    if regime is Regime.NoSolution:
        return 1.0
    if regime is Regime.PowerLaw:
        return (eps_to / eps_from) ** (-1.0 / gap_exponent(p.N, p.s))
    C = balance_prefactor(_reduced_for(p, eps_to), _peak_for(p))
    return math.exp(C * (1.0 / eps_to - 1.0 / eps_from))


def _peak_for(p: RadialProblem) -> PeakData:
    if p.weight is not None:
        return PeakData.from_weight(p.weight, np.zeros(p.N))
    h = 1e-4
    q0, q1 = float(p.q(np.array([0.0]))[0]), float(p.q(np.array([h]))[0])
    lap = p.N * 2 * (q1 - q0) / h ** 2
    return PeakData.paraboloid(p.N, lap, q0)


def _reduced_for(p: RadialProblem, eps: float) -> ReducedProblem:
    return ReducedProblem(p.N, p.s, eps, (_peak_for(p),), normalization=Normalization.calibrated)


def predicted_bubble_lambda(p: RadialProblem, eps: float) -> float:
    """Reduced-system balance point for the bubble parameter (calibrated constants)."""
    rp = _reduced_for(p, eps)
    C = balance_prefactor(rp, rp.peaks[0])
    if rp.regime is Regime.ExpLaw:
        return math.exp(C / eps)
    return C * eps ** (-1.0 / gap_exponent(p.N, p.s))


def predicted_peak_lambda(p: RadialProblem, eps: float) -> float:
    """The same prediction in the u(0)^{2/(N-2)} convention."""
    return math.sqrt(p.N * (p.N - 2) / p.qvals[0]) * predicted_bubble_lambda(p, eps)


def rescale(sol: RadialSolution, grid: np.ndarray, kappa: float) -> np.ndarray:
    """kappa^{(N-2)/2} u(kappa r), zero outside the original ball."""
    spl = sol.spline()
    R = sol.grid[-1]
    x = kappa * grid
    out = np.where(x < R, spl(np.minimum(x, R)), 0.0)
    out = np.maximum(out, 0.0) * kappa ** ((sol.N - 2) / 2)
    out[-1] = 0.0
    return out


def solve_at_height(p: RadialProblem, guess, h: float, eps_guess: float, max_iters: int = 60, tol: float = 1e-10):
    """Solve for (u, eps) with u(0) = h fixed, by Newton on the bordered system.

    Returns (u on nodes 0..M-1, eps). The bordered step costs two tridiagonal solves.
    """
    u = _interior(p, guess).copy()
    eps = float(eps_guess)
    sq_vol = np.sqrt(p.volumes[: p.M])
    m_old = math.inf
    for _ in range(max_iters):
        F, J = assemble_residual(p, u, eps)
        m = float(np.linalg.norm(F * sq_vol))
        be = backward_error(F, residual_weights(p, u, eps))
        if be <= tol and m > 0.5 * m_old:
            return u, eps
        y = J.solve(-F)
        z = J.solve(-_pos_pow(u, p.s))
        if z[0] == 0:
            raise SingularJacobian("bordered system is singular")
        de = (y[0] - h + u[0]) / z[0]
        du = y - de * z
        u, eps, m_old = u + du, eps + de, m
        if not math.isfinite(eps):
            break
        if np.max(np.abs(du)) <= 1e-11 * np.max(np.abs(u)) and abs(de) <= 1e-11 * abs(eps):
            return u, eps
    raise NonConvergence("height-constrained Newton did not converge")


def initial_solution(
    p: RadialProblem,
    eps: float,
    lam_b: float,
    cfg: NewtonConfig | None = None,
    max_iters: int = 60,
    seed: np.ndarray | None = None,
    eps_seed: float | None = None,
) -> RadialSolution:
    """Solution at ``eps`` reached by a secant search in u(0).

    The search starts from the ansatz of height ``lam_b`` or from ``seed``. Each
    trial height is solved with eps free, which converges far more reliably than
    a direct solve at fixed eps.
    """
    cfg = cfg or NewtonConfig(max_iters=100, residual_tol=1e-10, damping_min=1.0 / 1024)
    u = bubble_ansatz(p, lam_b)[:-1] if seed is None else _interior(p, seed).copy()
    h0 = u[0]
    u, e0 = solve_at_height(p, u, h0, eps if eps_seed is None else eps_seed)
    g0 = math.log(e0 / eps) if e0 > 0 else -math.inf
    # second trial: step toward the target along the bubble scaling
    exponent = (p.N - 2) / 2
    kappa = 1.5 if e0 > eps else 1 / 1.5
    h1 = h0 * kappa ** exponent
    v, e1 = solve_at_height(p, rescale_values(p, u, kappa), h1, e0)
    for _ in range(max_iters):
        g1 = math.log(e1 / eps) if e1 > 0 else -math.inf
        if abs(g1) <= 1e-10:
            break
        if not (math.isfinite(g0) and math.isfinite(g1)) or g1 == g0:
            raise NonConvergence("secant search in the peak height broke down")
        x0, x1 = math.log(h0), math.log(h1)
        x2 = x1 - g1 * (x1 - x0) / (g1 - g0)
        x2 = min(max(x2, x1 - math.log(4.0)), x1 + math.log(4.0))
        h2 = math.exp(x2)
        kappa = (h2 / h1) ** (1 / exponent)
        w, e2 = solve_at_height(p, rescale_values(p, v, kappa), h2, e1)
        h0, g0 = h1, g1
        h1, v, e1 = h2, w, e2
    else:
        raise NonConvergence("secant search in the peak height did not converge")
    sol = solve_radial(p, eps, np.append(v, 0.0), cfg)
    if sol.peak_height <= 0:
        raise NonConvergence("converged to the trivial solution")
    return sol


def solve_from(p: RadialProblem, eps: float, guess) -> RadialSolution:
    """Newton at fixed eps from ``guess``; if it stalls, a secant search in u(0) seeded by ``guess``.

    The stall is typical: one Newton step lands near the family of rescaled bubbles
    and the remaining error lies along the almost-flat dilation direction.
    """
    try:
        return solve_radial(p, eps, guess)
    except (NonConvergence, SingularJacobian):
        return initial_solution(p, eps, 0.0, seed=guess, eps_seed=eps)


def transfer_solution(p: RadialProblem, sol: RadialSolution) -> RadialSolution:
    """Re-solve ``sol`` on the grid of ``p`` at the same eps (for grid refinement studies)."""
    return solve_from(p, sol.eps, rescale(sol, p.grid, 1.0))


def rescale_values(p: RadialProblem, u: np.ndarray, kappa: float) -> np.ndarray:
    full = np.append(_interior(p, u), 0.0)
    sol = RadialSolution(p.grid, full, 0.0, p.N, math.nan)
    return rescale(sol, p.grid, kappa)[:-1]


def continue_branch(
    p: RadialProblem,
    eps_start: float,
    eps_end: float,
    steps_per_decade: int = 8,
    *,
    lam0: float | None = None,
    min_nodes: int = 8,
    max_halvings: int = 5,
    pohozaev: Callable | None = None,
    cfg: NewtonConfig = NewtonConfig(max_iters=100, residual_tol=1e-10, damping_min=1.0 / 1024),
) -> Branch:
    """Follow the concentrating branch from ``eps_start`` down to ``eps_end``.

    The first point starts from the projected-bubble ansatz at the predicted
    height (or ``lam0``). Later predictors rescale the previous solution by the
    reduced height ratio. Steps are geometric in eps and halved on Newton
    failure. ``pohozaev(p, sol)`` may supply a residual stored per point.
    """
    if not eps_start > eps_end > 0:
        raise ValidationError("need eps_start > eps_end > 0")
    if p.s == 1 and eps_start >= discrete_first_eigenvalue(p):
        raise ValidationError("for s = 1 the start must lie below the first eigenvalue")
    regime = classify(p.N, p.s) if p.N >= 4 else Regime.PowerLaw
    lam_b = lam0
    if lam_b is None:
        lam_b = predicted_bubble_lambda(p, eps_start) if regime is not Regime.NoSolution else 2.0
    try:
        sol = initial_solution(p, eps_start, lam_b, cfg)
    except NumericalError as ex:
        raise InitialSolveFailed(f"initial solve failed at eps={eps_start:g}: {ex}") from None
    if sol.half_height_nodes() < min_nodes:
        raise ResolutionLost("peak unresolved at the first point", eps_start)
    branch = Branch(p.N, p.s)

    def accept(s_):
        st = extract_structure(s_, p=p)
        pr = pohozaev(p, s_) if pohozaev is not None else math.nan
        branch.points.append(BranchPoint(s_.eps, s_, st.w_norm_rel, st.lam_bubble, st.mass_ratio, pr))

    accept(sol)
    step = math.log(10.0) / steps_per_decade
    log_end = math.log(eps_end)
    eps = eps_start
    while True:
        if math.log(eps) <= log_end + 1e-12:
            branch.stop_reason = "range_exhausted"
            branch.stop_eps = eps
            return branch
        h = step
        new = None
        for _ in range(max_halvings + 1):
            eps_next = max(math.exp(math.log(eps) - h), eps_end)
            kappa = height_ratio(p, eps, eps_next)
            guess = rescale(sol, p.grid, kappa)
            try:
                cand = solve_radial(p, eps_next, guess, cfg)
                if cand.peak_height > 0.5 * sol.peak_height:
                    new = cand
                    break
            except (NonConvergence, SingularJacobian):
                pass
            try:
                cand = initial_solution(p, eps_next, 0.0, cfg, seed=guess, eps_seed=eps_next)
                if cand.peak_height > 0.5 * sol.peak_height:
                    new = cand
                    break
            except (NumericalError, ValueError):
                pass
            h *= 0.5
        if new is None:
            branch.stop_reason = "newton_failure"
            branch.stop_eps = eps_next
            return branch
        if new.half_height_nodes() < min_nodes:
            branch.stop_reason = "resolution_lost"
            branch.stop_eps = new.eps
            return branch
        sol, eps = new, new.eps
        accept(sol)


BRANCH_HEADER = ["eps", "u0", "lambda", "w_rel", "pohozaev_residual", "newton_iters"]


def fmt(x: float) -> str:
    """Full-precision scientific notation (17 significant digits)."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.16e}"


def branch_to_csv(branch: Branch) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BRANCH_HEADER)
    for pt in branch.points:
        w.writerow([fmt(pt.eps), fmt(pt.u0), fmt(pt.lam), fmt(pt.w_rel), fmt(pt.pohozaev_residual), str(pt.newton_iters)])
    return buf.getvalue()


def parse_branch_csv(text: str) -> list[dict]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != BRANCH_HEADER:
        raise ValidationError("unexpected branch CSV header")
    out = []
    for row in rows[1:]:
        d = {k: float(v) for k, v in zip(BRANCH_HEADER[:-1], row[:-1])}
        d["newton_iters"] = int(row[-1])
        out.append(d)
    return out


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BRANCH_HEADER)
    for d in rows:
        w.writerow([fmt(d[k]) for k in BRANCH_HEADER[:-1]] + [str(d["newton_iters"])])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# uniqueness probe

@dataclass(frozen=True)
class DiffQuotient:
    xi: np.ndarray
    normalizer: float
    potential: np.ndarray
    residual_rel: float


@dataclass(frozen=True)
class ProbeResult:
    same: bool
    sup_distance: float
    solutions: tuple
    quotient: DiffQuotient | None
    comparable: bool


def difference_potential(p: RadialProblem, u1: np.ndarray, u2: np.ndarray, eps: float, nodes: int = 16) -> np.ndarray:
    """C = (2*-1) Q int_0^1 w_t^{4/(N-2)} dt + eps s int_0^1 w_t^{s-1} dt, w_t = t u1 + (1-t) u2."""
    t, wt = gauss_legendre_unit(nodes)
    W = t[:, None] * u1[None, :] + (1 - t[:, None]) * u2[None, :]
    crit = (p.p * p.qvals[: u1.size]) * (wt @ _pos_pow(W, 4.0 / (p.N - 2)))
    sub = eps * p.s * (wt @ _pos_pow(W, p.s - 1))
    return crit + sub


def difference_quotient(p: RadialProblem, u1: np.ndarray, u2: np.ndarray, eps: float) -> DiffQuotient:
    """xi = (u1 - u2)/||u1 - u2||_inf with its potential and the residual of -Delta xi = C xi."""
    a, b = _interior(p, u1), _interior(p, u2)
    diff = a - b
    nrm = float(np.max(np.abs(diff)))
    if nrm == 0:
        raise NumericalError("solutions coincide; the difference quotient is undefined")
    xi = diff / nrm
    C = difference_potential(p, a, b, eps)
    r = p.apply_laplacian(xi) - C * xi
    w = _abs_laplacian(p).matvec(np.abs(xi)) + np.abs(C * xi)
    return DiffQuotient(np.append(xi, 0.0), nrm, np.append(C, C[-1]), backward_error(r, w))


def uniqueness_probe(p: RadialProblem, eps: float, guess_a, guess_b, *, tol: float = 1e-8) -> ProbeResult:
    """Solve from two guesses (arrays or bubble heights) and compare."""
    sols = []
    for g in (guess_a, guess_b):
        guess = bubble_ansatz(p, float(g)) if np.ndim(g) == 0 else np.asarray(g, dtype=float)
        try:
            sols.append(solve_from(p, eps, guess))
        except NumericalError as ex:
            raise SolveFailed(str(ex)) from None
    ua, ub = sols[0].values, sols[1].values
    dist = float(np.max(np.abs(ua - ub)))
    ha, hb = sols[0].peak_height, sols[1].peak_height
    comparable = hb > 0 and ha > 0 and 0.25 <= ha / hb <= 4.0
    if dist <= tol * float(np.max(np.abs(ua))):
        return ProbeResult(True, dist, tuple(sols), None, comparable)
    dq = difference_quotient(p, ua, ub, eps)
    return ProbeResult(False, dist, tuple(sols), dq, comparable)
