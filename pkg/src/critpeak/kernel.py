"""Bubbles U_{x,lam}, their parameter derivatives, the ball Green's function and
the projection PU = U - phi onto zero Dirichlet data."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import CoincidentPoints, ModeDomainMismatch, OutsideDomain, ValidationError
from .numerics import sphere_area, sphere_rule


def bubble_constant(N: int) -> float:
    """(N(N-2))^((N-2)/4), the factor making U solve -Delta U = U^(2*-1)."""
    return (N * (N - 2.0)) ** ((N - 2.0) / 4.0)


def critical_exponent(N: int) -> float:
    """2* = 2N/(N-2)."""
    return 2.0 * N / (N - 2.0)


@dataclass(frozen=True)
class Bubble:
    center: np.ndarray
    height: float
    dimension: int

    def __post_init__(self):
        if self.dimension < 3:
            raise ValidationError("bubbles need dimension >= 3")
        if not self.height > 0:
            raise ValidationError("bubble height must be positive")
        c = np.asarray(self.center, dtype=float).reshape(-1)
        if c.size == 1 and self.dimension > 1 and c[0] == 0.0:
            c = np.zeros(self.dimension)
        if c.size != self.dimension:
            raise ValidationError("center must have `dimension` coordinates")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "center", c)

    @classmethod
    def centered(cls, N: int, lam: float) -> "Bubble":
        return cls(np.zeros(N), lam, N)

    def with_height(self, lam: float) -> "Bubble":
        return Bubble(self.center, lam, self.dimension)


# radial profiles, rho = |y - x|

def bubble_profile(N: int, lam, rho):
    lam = np.asarray(lam, dtype=float)
    return bubble_constant(N) * lam ** ((N - 2) / 2) * (1.0 + (lam * rho) ** 2) ** (-(N - 2) / 2)


def bubble_profile_dlam(N: int, lam, rho):
    """dU/dlam = c (N-2)/2 lam^((N-4)/2) (1 - lam^2 rho^2)(1 + lam^2 rho^2)^(-N/2)."""
    q = (lam * rho) ** 2
    return bubble_constant(N) * 0.5 * (N - 2) * lam ** ((N - 4) / 2) * (1.0 - q) * (1.0 + q) ** (-N / 2)


def bubble_profile_dr(N: int, lam, rho):
    """Radial derivative dU/drho."""
    q = (lam * rho) ** 2
    return -bubble_constant(N) * (N - 2) * lam ** ((N + 2) / 2) * rho * (1.0 + q) ** (-N / 2)


def _offsets(b: Bubble, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != b.dimension:
        raise ValidationError("point dimension does not match the bubble")
    return y - b.center


def eval_bubble(b: Bubble, y):
    z = _offsets(b, y)
    return bubble_profile(b.dimension, b.height, np.linalg.norm(z, axis=-1))


def bubble_derivatives(b: Bubble, y):
    """Return (dU/dlam, dU/dx) at ``y``; dU/dx has the trailing shape (N,)."""
    N, lam = b.dimension, b.height
    z = _offsets(b, y)
    rho = np.linalg.norm(z, axis=-1)
    d_lam = bubble_profile_dlam(N, lam, rho)
    factor = bubble_constant(N) * (N - 2) * lam ** ((N + 2) / 2) * (1.0 + (lam * rho) ** 2) ** (-N / 2)
    return d_lam, np.asarray(factor)[..., None] * z


def limit_kernels(N: int, i: int, y):
    """psi_0 = dU_{0,lam}/dlam at lam=1; psi_i = dU_{x,1}/dx^i at x=0 (i = 1..N)."""
    y = np.asarray(y, dtype=float)
    if not 0 <= i <= N:
        raise ValidationError("kernel index must lie in 0..N")
    rho = np.linalg.norm(y, axis=-1)
    if i == 0:
        return bubble_profile_dlam(N, 1.0, rho)
    return bubble_constant(N) * (N - 2) * y[..., i - 1] * (1.0 + rho * rho) ** (-N / 2)


@dataclass(frozen=True)
class BallDomain:
    dimension: int
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValidationError("ball radius must be positive")
        if self.dimension < 3:
            raise ValidationError("ball dimension must be >= 3")


def green_constant(N: int) -> float:
    """1/((N-2) omega_N)."""
    return 1.0 / ((N - 2) * sphere_area(N))


def _image_distance(R: float, x, y):
    """|x| |y - x*| / R, written to stay smooth at x = 0 and symmetric in (x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xx = np.sum(x * x, axis=-1)
    yy = np.sum(y * y, axis=-1)
    xy = np.sum(x * y, axis=-1)
    return np.sqrt(np.maximum(xx * yy / (R * R) - 2.0 * xy + R * R, 0.0))


def green_ball(domain: BallDomain, x, y):
    """Dirichlet Green's function G(x, y) of the ball and its regular part H.

    ``G = c'(|x-y|^(2-N) - H~)`` and ``H = c' |x-y|^(2-N) - G``.
    """
    N, R = domain.dimension, domain.radius
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(np.linalg.norm(x, axis=-1) >= R) or np.any(np.linalg.norm(y, axis=-1) > R):
        raise OutsideDomain("points must lie inside the ball")
    dist = np.linalg.norm(x - y, axis=-1)
    if np.any(dist == 0):
        raise CoincidentPoints("G is singular at x = y")
    cp = green_constant(N)
    H = cp * _image_distance(R, x, y) ** (2 - N)
    G = cp * dist ** (2 - N) - H
    return G, H


class ProjectionMode(enum.Enum):
    ExactConstantBoundary = "ExactConstantBoundary"
    PoissonKernel = "PoissonKernel"
    ReyLeadingOrder = "ReyLeadingOrder"


def _check_mode(b: Bubble, domain: BallDomain, mode: ProjectionMode):
    if b.dimension != domain.dimension:
        raise ModeDomainMismatch("bubble and domain dimensions differ")
    if mode is ProjectionMode.ExactConstantBoundary and np.any(b.center != 0):
        raise ModeDomainMismatch("ExactConstantBoundary needs a bubble centered at the ball center")
    if np.linalg.norm(b.center) >= domain.radius:
        raise ModeDomainMismatch("bubble center lies outside the domain")


def _poisson(domain: BallDomain, y: np.ndarray, data, degree: int, chunk: int = 64):
    """Poisson integral of ``data(zeta)`` over the boundary sphere, at points y (m, N)."""
    N, R = domain.dimension, domain.radius
    P, W = sphere_rule(N, degree)
    zeta = R * P
    g = data(zeta)  # shape (n,) or (n, k)
    omega = sphere_area(N)
    # cap the (chunk, nodes, N) work array near 32 MB
    chunk = max(1, min(chunk, 4_000_000 // (zeta.shape[0] * N)))
    out = []
    for s in range(0, y.shape[0], chunk):
        yc = y[s:s + chunk]
        d2 = np.sum((yc[:, None, :] - zeta[None, :, :]) ** 2, axis=-1)
        ker = (R * R - np.sum(yc * yc, axis=-1))[:, None] * d2 ** (-N / 2) * (R ** (N - 2) / omega)
        out.append(np.tensordot(ker * W[None, :], g, axes=(1, 0)))
    return np.concatenate(out, axis=0)


def project_bubble(
    b: Bubble,
    domain: BallDomain,
    mode: ProjectionMode,
    y,
    *,
    degree: int = 31,
):
    """Return (PU, phi) at ``y`` where phi is the harmonic extension of U on the boundary.

    On the boundary sphere itself phi equals U, so PU vanishes exactly there.
    """
    _check_mode(b, domain, mode)
    N, R, lam = b.dimension, domain.radius, b.height
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != N:
        raise ValidationError("point dimension does not match the domain")
    ny = np.linalg.norm(y, axis=-1)
    if np.any(ny > R * (1 + 1e-14)):
        raise OutsideDomain("evaluation point outside the ball")
    U = eval_bubble(b, y)
    if mode is ProjectionMode.ExactConstantBoundary:
        phi = np.broadcast_to(bubble_profile(N, lam, R), np.shape(U)).copy()
    elif mode is ProjectionMode.ReyLeadingOrder:
        phi = bubble_constant(N) * lam ** (-(N - 2) / 2) * _image_distance(R, b.center, y) ** (2 - N)
    else:
        flat = y.reshape(-1, N)
        phi = _poisson(domain, flat, lambda z: eval_bubble(b, z), degree).reshape(np.shape(U))
        on_bdry = ny >= R * (1 - 1e-14)
        phi = np.where(on_bdry, U, phi)
    return U - phi, phi


def project_bubble_derivatives(
    b: Bubble,
    domain: BallDomain,
    mode: ProjectionMode,
    y,
    *,
    degree: int = 31,
):
    """(dPU/dlam, dPU/dx) with the derivatives of phi taken under the boundary integral."""
    _check_mode(b, domain, mode)
    N, R, lam = b.dimension, domain.radius, b.height
    y = np.asarray(y, dtype=float)
    dU_lam, dU_x = bubble_derivatives(b, y)
    c = bubble_constant(N)
    if mode is ProjectionMode.ExactConstantBoundary:
        dphi_lam = np.broadcast_to(bubble_profile_dlam(N, lam, R), np.shape(dU_lam))
        # boundary data of dU/dx^i is linear in zeta, so its extension is linear in y
        amp = c * (N - 2) * lam ** ((N + 2) / 2) * (1 + (lam * R) ** 2) ** (-N / 2)
        dphi_x = amp * y
    elif mode is ProjectionMode.ReyLeadingOrder:
        base = _image_distance(R, b.center, y)
        phi = c * lam ** (-(N - 2) / 2) * base ** (2 - N)
        dphi_lam = -(N - 2) / (2 * lam) * phi
        yy = np.sum(y * y, axis=-1, keepdims=True)
        dbase2_dx = 2 * yy * b.center / (R * R) - 2 * y
        dphi_x = c * lam ** (-(N - 2) / 2) * ((2 - N) / 2) * (base ** (-N))[..., None] * dbase2_dx
    else:
        flat = y.reshape(-1, N)

        def data(z):
            dl, dx = bubble_derivatives(b, z)
            return np.column_stack([dl, dx])

        vals = _poisson(domain, flat, data, degree)
        dphi_lam = vals[:, 0].reshape(np.shape(dU_lam))
        dphi_x = vals[:, 1:].reshape(np.shape(dU_x))
    return dU_lam - dphi_lam, dU_x - dphi_x


def sup_phi_scaled(b: Bubble, domain: BallDomain, mode: ProjectionMode, samples) -> float:
    """max over samples of phi * lam^((N-2)/2), the quantity bounded uniformly in lam."""
    _, phi = project_bubble(b, domain, mode, samples)
    return float(np.max(phi) * b.height ** ((b.dimension - 2) / 2))


__all__ = [
    "Bubble",
    "BallDomain",
    "ProjectionMode",
    "bubble_constant",
    "critical_exponent",
    "bubble_profile",
    "bubble_profile_dlam",
    "bubble_profile_dr",
    "eval_bubble",
    "bubble_derivatives",
    "limit_kernels",
    "green_ball",
    "green_constant",
    "project_bubble",
    "project_bubble_derivatives",
    "sup_phi_scaled",
]
