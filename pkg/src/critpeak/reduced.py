"""The finite-dimensional reduced system: peak locations and heights.

Heights are handled in the coordinate t = log(lambda) so that the
exponential regime (lambda ~ e^{c/eps}) never overflows. Height residuals are
reported multiplied by lambda^3, which turns the balance into
``1 + K eps lambda^g`` (power law) or ``1 + K eps log(lambda)`` (N = 4, s = 1).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import check_exponent, closed_form_A, closed_form_B
from .errors import BoxConstantsInvalid, RegimeMismatch, ValidationError
from .kernel import bubble_constant, critical_exponent
from .numerics import Box, NewtonConfig, NoSignChange, face_values, miranda_search, newton_solve, sphere_area
from .weights import WeightSpec


class Regime(enum.Enum):
    PowerLaw = "PowerLaw"
    ExpLaw = "ExpLaw"
    NoSolution = "NoSolution"


class Normalization(enum.Enum):
    """Which constants enter the height balance.

    ``paper`` uses A, B, omega_4 as defined (no bubble normalization).
    ``calibrated`` uses the effective constants of a solution u ~ Q(a)^{-(N-2)/4} PU:
    A -> c^2* Q(a)^{-N/2} A / 2, B -> c^{s+1} Q(a)^{-(N-2)(s+1)/4} B,
    omega_4 -> c^2 omega_4 / Q(a). These reproduce the true leading balance.
    """

    paper = "paper"
    calibrated = "calibrated"


@dataclass(frozen=True)
class PeakData:
    location: np.ndarray
    value: float
    gradient: np.ndarray
    laplacian: float
    hessian: np.ndarray

    def __post_init__(self):
        loc = np.asarray(self.location, dtype=float).reshape(-1)
        H = np.asarray(self.hessian, dtype=float)
        g = np.asarray(self.gradient, dtype=float).reshape(-1)
        N = loc.size
        if H.shape != (N, N) or g.size != N:
            raise ValidationError("peak arrays have inconsistent dimensions")
        if not np.allclose(H, H.T, rtol=1e-12, atol=1e-14):
            raise ValidationError("hessian must be symmetric")
        if not self.value > 0:
            raise ValidationError("Q must be positive at a peak")
        scale = max(1.0, float(np.max(np.abs(H))))
        if np.linalg.norm(g) > 1e-12 * scale:
            raise ValidationError("gradient of Q must vanish at a peak")
        if not self.laplacian < 0:
            raise ValidationError("Delta Q must be negative at a peak")
        if not abs(np.linalg.det(H)) > 0:
            raise ValidationError("hessian must be nondegenerate")
        if not math.isclose(float(np.trace(H)), float(self.laplacian), rel_tol=1e-10, abs_tol=1e-12):
            raise ValidationError("laplacian must equal the trace of the hessian")
        object.__setattr__(self, "location", loc)
        object.__setattr__(self, "gradient", g)
        object.__setattr__(self, "hessian", 0.5 * (H + H.T))

    @property
    def dimension(self) -> int:
        return self.location.size

    @classmethod
    def from_weight(cls, Q: WeightSpec, a) -> "PeakData":
        a = np.asarray(a, dtype=float)
        H = np.asarray(Q.hessian(a), dtype=float)
        return cls(a, float(Q.value(a)), np.asarray(Q.gradient(a)), float(np.trace(H)), H)

    @classmethod
    def paraboloid(cls, N: int, lap: float, q0: float = 1.0, center=None) -> "PeakData":
        """Isotropic peak with Q(a) = q0 and Hessian (lap/N) I."""
        a = np.zeros(N) if center is None else np.asarray(center, dtype=float)
        return cls(a, q0, np.zeros(N), lap, (lap / N) * np.eye(N))

    def scaled(self, c: float) -> "PeakData":
        return PeakData(self.location, c * self.value, c * self.gradient, c * self.laplacian, c * self.hessian)


def classify(N: int, s: float) -> Regime:
    if s == 1:
        return Regime.ExpLaw if N == 4 else Regime.NoSolution
    return Regime.PowerLaw


def gap_exponent(N: int, s: float) -> float:
    """g = (N-2)(s-1)/2, the power separating the two height terms."""
    return (N - 2) * (s - 1) / 2


@dataclass(frozen=True)
class ReducedProblem:
    N: int
    s: float
    eps: float
    peaks: tuple
    box_constants: tuple | None = None
    normalization: Normalization = Normalization.paper

    def __post_init__(self):
        if self.N < 4:
            raise ValidationError("the reduced system needs N >= 4")
        check_exponent(self.N, self.s)
        if not self.eps > 0:
            raise ValidationError("eps must be positive")
        peaks = tuple(self.peaks)
        if not peaks:
            raise ValidationError("at least one peak is required")
        for p in peaks:
            if not isinstance(p, PeakData) or p.dimension != self.N:
                raise ValidationError("peaks must be PeakData of dimension N")
        for i in range(len(peaks)):
            for j in range(i):
                if np.array_equal(peaks[i].location, peaks[j].location):
                    raise ValidationError("peaks must be pairwise distinct")
        if self.box_constants is not None:
            c1, c2 = self.box_constants
            if not 0 < c1 < c2:
                raise ValidationError("box constants need 0 < c1 < c2")
        object.__setattr__(self, "peaks", peaks)
        object.__setattr__(self, "normalization", Normalization(self.normalization))

    @property
    def regime(self) -> Regime:
        return classify(self.N, self.s)

    def separation(self) -> float:
        if len(self.peaks) < 2:
            return math.inf
        locs = [p.location for p in self.peaks]
        return min(
            float(np.linalg.norm(locs[i] - locs[j])) for i in range(len(locs)) for j in range(i)
        )


# ---------------------------------------------------------------------------
# residuals

def height_coefficient(N: int, s: float, lap: float, A: float, B: float, omega4: float) -> float:
    """K in 1/lam^3 + K eps lam^(g-3) (or its log analogue when N + s = 5)."""
    if N + s == 5:
        return 2.0 * omega4 / (A * lap)
    return N * (4 - (N - 2) * (s - 1)) * B / (2 * A * (N - 2) * lap * (s + 1))


def height_residual(N: int, s: float, eps: float, lap: float, A: float, B: float, omega4: float, lam: float) -> float:
    """Leading-order height equation; remainders are dropped."""
    if not lam >= 2:
        raise ValidationError("lambda must be at least 2")
    if not lap < 0:
        raise ValidationError("Delta Q must be negative")
    K = height_coefficient(N, s, lap, A, B, omega4)
    if N + s == 5:
        return 1.0 / lam ** 3 + K * eps * math.log(lam) / lam ** 3
    g = gap_exponent(N, s)
    return 1.0 / lam ** 3 + K * eps / lam ** (3 - g)


def location_residual(peak: PeakData, y, separation: float = math.inf) -> np.ndarray:
    """Hessian of Q at the peak applied to y - a (remainders dropped)."""
    z = np.asarray(y, dtype=float) - peak.location
    if math.isfinite(separation) and np.linalg.norm(z) > 0.1 * separation:
        raise ValidationError("y must stay within 0.1 * (peak separation) of its peak")
    return peak.hessian @ z


def effective_constants(problem: ReducedProblem, peak: PeakData) -> tuple[float, float, float]:
    """(A, B, omega_4) entering the balance under the problem's normalization."""
    N, s = problem.N, problem.s
    A = closed_form_A(N)
    B = math.nan if N + s == 5 else closed_form_B(N, s)
    om = sphere_area(4)
    if problem.normalization is Normalization.paper:
        return A, B, om
    c = bubble_constant(N)
    q = peak.value
    A_eff = c ** critical_exponent(N) * q ** (-N / 2) * A / 2
    B_eff = c ** (s + 1) * q ** (-(N - 2) * (s + 1) / 4) * B
    om_eff = c ** 2 * om / q
    return A_eff, B_eff, om_eff


def scaled_height_residual(problem: ReducedProblem, peak: PeakData, t: float) -> float:
    """lam^3 times the height residual at lam = e^t."""
    A, B, om = effective_constants(problem, peak)
    K = height_coefficient(problem.N, problem.s, peak.laplacian, A, B, om)
    if problem.N + problem.s == 5:
        return 1.0 + K * problem.eps * t
    g = gap_exponent(problem.N, problem.s)
    return 1.0 + K * problem.eps * math.exp(g * t) if g > 0 else 1.0 + K * problem.eps


def balance_prefactor(problem: ReducedProblem, peak: PeakData) -> float:
    """C with lam* = C eps^(-1/g) (power law) or log lam* = C / eps (N = 4, s = 1)."""
    A, B, om = effective_constants(problem, peak)
    K = height_coefficient(problem.N, problem.s, peak.laplacian, A, B, om)
    if problem.regime is Regime.ExpLaw:
        return 1.0 / abs(K)
    if problem.regime is Regime.PowerLaw:
        return abs(K) ** (-1.0 / gap_exponent(problem.N, problem.s))
    raise RegimeMismatch("no balance point when N >= 5 and s = 1")


# ---------------------------------------------------------------------------
# solver

@dataclass(frozen=True)
class ReducedSolution:
    regime: Regime
    centers: tuple
    log_heights: np.ndarray
    prefactors: np.ndarray
    residual: float
    search_box: Box | None = None
    miranda_depth: int = 0
    certificate: dict = field(default_factory=dict)
    normalization: Normalization = Normalization.paper

    @property
    def heights(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_heights)

    def peak_lambdas(self, peaks) -> np.ndarray:
        """Heights converted to the convention u(a)^{2/(N-2)} used for computed solutions."""
        out = []
        for t, p in zip(self.log_heights, peaks):
            N = p.dimension
            with np.errstate(over="ignore"):
                out.append(math.sqrt(N * (N - 2) / p.value) * np.exp(t))
        return np.array(out)


def _box_constants(problem: ReducedProblem) -> list[tuple[float, float]]:
    out = []
    for p in problem.peaks:
        if problem.box_constants is not None:
            out.append(tuple(problem.box_constants))
        else:
            C = balance_prefactor(problem, p)
            out.append((0.1 * C, 10.0 * C))
    return out


def _location_halfwidth(problem: ReducedProblem, c1: float) -> float:
    if problem.regime is Regime.ExpLaw:
        delta = math.exp(-c1 / (2 * problem.eps))
    else:
        delta = problem.eps ** (1.0 / (2 * (problem.s - 1)))
    sep = problem.separation()
    if math.isfinite(sep):
        delta = min(delta, 0.1 * sep)
    return max(delta, 1e-200)


def _no_solution(problem: ReducedProblem) -> ReducedSolution:
    certs = []
    c1, c2 = problem.box_constants or (2.0, max(1e3, 10.0 / problem.eps))
    c1 = max(c1, 2.0)
    for p in problem.peaks:
        Aa, Bb, om = effective_constants(problem, p)
        K = height_coefficient(problem.N, problem.s, p.laplacian, Aa, Bb, om)
        lams = np.geomspace(c1, c2, 9)
        vals = [
            height_residual(problem.N, problem.s, problem.eps, p.laplacian, Aa, Bb, om, float(l)) for l in lams
        ]
        lead = 1.0 + K * problem.eps
        certs.append(
            {
                "K": K,
                "one_plus_K_eps": lead,
                "sign": int(np.sign(lead)),
                "lambda_box": [c1, c2],
                "samples_lambda": [float(x) for x in lams],
                "samples_residual": [float(v) for v in vals],
            }
        )
    return ReducedSolution(
        regime=Regime.NoSolution,
        centers=tuple(p.location.copy() for p in problem.peaks),
        log_heights=np.full(len(problem.peaks), math.nan),
        prefactors=np.full(len(problem.peaks), math.nan),
        residual=math.nan,
        certificate={
            "reason": "height residual is (1 + K eps)/lambda^3 with no sign change on the box",
            "peaks": certs,
        },
        normalization=problem.normalization,
    )


def _system(problem: ReducedProblem):
    """Block-diagonal residual in coordinates (z_1..z_m, t_1..t_m) with z = V^T (y - a)."""
    N, m = problem.N, len(problem.peaks)
    eig = []
    for p in problem.peaks:
        mu, V = np.linalg.eigh(p.hessian)  # ascending, stable ordering
        eig.append((mu, V))

    # K eps per peak, fixed for the whole search
    Ke = np.array([
        height_coefficient(N, problem.s, p.laplacian, *effective_constants(problem, p)) * problem.eps
        for p in problem.peaks
    ])
    mus = np.concatenate([mu for mu, _ in eig])
    log_case = N + problem.s == 5
    g = gap_exponent(N, problem.s)

    def F(X):
        # accepts one point (k,) or a stack (n, k)
        X = np.asarray(X, dtype=float)
        t = X[..., m * N:]
        h = 1.0 + Ke * (t if log_case else np.exp(g * t))
        return np.concatenate([mus * X[..., :m * N], h], axis=-1)

    return F, eig


def solve_reduced(problem: ReducedProblem, *, refinement_depth: int = 12) -> ReducedSolution:
    """Poincare-Miranda search on the product box followed by a Newton polish."""
    regime = problem.regime
    if regime is Regime.NoSolution:
        return _no_solution(problem)
    N, m, eps = problem.N, len(problem.peaks), problem.eps
    consts = _box_constants(problem)
    F, eig = _system(problem)
    lo, hi = [], []
    deltas = [_location_halfwidth(problem, c1) for c1, _ in consts]
    for j in range(m):
        lo += [-deltas[j]] * N
        hi += [deltas[j]] * N
    for c1, c2 in consts:
        if regime is Regime.ExpLaw:
            lo.append(c1 / eps)
            hi.append(c2 / eps)
        else:
            g = gap_exponent(N, problem.s)
            lo.append(math.log(c1) - math.log(eps) / g)
            hi.append(math.log(c2) - math.log(eps) / g)
    box = Box(np.array(lo), np.array(hi))
    found = miranda_search(F, box, refinement_depth, vectorized=True)
    if isinstance(found, NoSignChange):
        raise BoxConstantsInvalid(f"no Miranda sign change for component {found.component}")
    X0 = found.box.center
    cfg = NewtonConfig(max_iters=60, residual_tol=1e-12, damping_min=1.0 / 1024)
    X = newton_solve(F, X0, None, cfg)
    res = float(np.max(np.abs(F(X))))
    centers = []
    for j, p in enumerate(problem.peaks):
        _, V = eig[j]
        centers.append(p.location + V @ X[j * N:(j + 1) * N])
    t = X[m * N:]
    if regime is Regime.ExpLaw:
        pref = eps * t
    else:
        pref = np.exp(t + math.log(eps) / gap_exponent(N, problem.s))
    return ReducedSolution(
        regime=regime,
        centers=tuple(centers),
        log_heights=t.copy(),
        prefactors=pref,
        residual=res,
        search_box=found.box,
        miranda_depth=found.depth,
        normalization=problem.normalization,
    )


def certificate_holds(problem: ReducedProblem, sol: ReducedSolution) -> bool:
    """Re-check the Miranda sign change on every face pair of the returned sub-box."""
    if sol.search_box is None:
        return False
    F, _ = _system(problem)
    for i in range(sol.search_box.dim):
        lo, hi = face_values(F, sol.search_box, i, vectorized=True)
        ok = (np.all(lo <= 0) and np.all(hi >= 0)) or (np.all(lo >= 0) and np.all(hi <= 0))
        if not ok:
            return False
    return True


@dataclass(frozen=True)
class ScalingPrediction:
    regime: Regime
    exponent: float | None
    exp_rates: tuple
    prefactors: tuple


def predict_scaling(problem: ReducedProblem) -> ScalingPrediction:
    """PowerLaw: lam ~ C eps^(-2/((N-2)(s-1))). ExpLaw: eps log lam -> A|Delta Q|/(2 omega_4)."""
    regime = problem.regime
    if regime is Regime.NoSolution:
        raise RegimeMismatch("no scaling law when N >= 5 and s = 1")
    prefs = tuple(balance_prefactor(problem, p) for p in problem.peaks)
    if regime is Regime.PowerLaw:
        return ScalingPrediction(regime, -2.0 / ((problem.N - 2) * (problem.s - 1)), (), prefs)
    return ScalingPrediction(regime, None, prefs, prefs)


def predicted_peak_lambda(problem: ReducedProblem, j: int = 0) -> float:
    """Balance-point height in the u(a)^{2/(N-2)} convention (for comparison with computed solutions)."""
    p = problem.peaks[j]
    C = balance_prefactor(problem, p)
    N = problem.N
    conv = math.sqrt(N * (N - 2) / p.value)
    if problem.regime is Regime.ExpLaw:
        return conv * math.exp(C / problem.eps)
    return conv * C * problem.eps ** (-1.0 / gap_exponent(N, problem.s))
