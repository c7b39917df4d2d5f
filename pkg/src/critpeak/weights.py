"""The coefficient Q(x) of the critical term, with derivatives and peaks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ValidationError

Field = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class WeightSpec:
    """Q with vectorized value, gradient and Hessian over points of shape (..., N).

    ``peaks`` lists the nondegenerate local maxima used as concentration sites.
    """

    dimension: int
    value: Field
    gradient: Field
    hessian: Field
    peaks: tuple = field(default=())
    name: str = "custom"
    radial_profile: Callable | None = None

    @classmethod
    def paraboloid(cls, q0: float, hessian, center=None) -> "WeightSpec":
        """Q(x) = q0 + (x-a)^T H (x-a) / 2."""
        H = np.atleast_2d(np.asarray(hessian, dtype=float))
        N = H.shape[0]
        if H.shape != (N, N) or not np.allclose(H, H.T):
            raise ValidationError("hessian must be a symmetric square matrix")
        a = np.zeros(N) if center is None else np.asarray(center, dtype=float)
        H = 0.5 * (H + H.T)

        def value(x):
            z = np.asarray(x, dtype=float) - a
            return q0 + 0.5 * np.einsum("...i,ij,...j->...", z, H, z)

        def gradient(x):
            return (np.asarray(x, dtype=float) - a) @ H

        def hess(x):
            x = np.asarray(x, dtype=float)
            return np.broadcast_to(H, x.shape[:-1] + (N, N))

        isotropic = np.allclose(H, H[0, 0] * np.eye(N)) and not np.any(a)
        profile = (lambda r: q0 + 0.5 * H[0, 0] * np.asarray(r) ** 2) if isotropic else None
        peaks = (a.copy(),) if np.all(np.linalg.eigvalsh(H) < 0) else ()
        return cls(N, value, gradient, hess, peaks, "paraboloid", profile)

    @classmethod
    def constant(cls, N: int, q0: float = 1.0) -> "WeightSpec":
        def value(x):
            return np.full(np.shape(x)[:-1], float(q0))

        def gradient(x):
            return np.zeros(np.shape(x))

        def hess(x):
            return np.zeros(np.shape(x)[:-1] + (N, N))

        return cls(N, value, gradient, hess, (), "constant", lambda r: np.full(np.shape(r), float(q0)))

    @classmethod
    def standard(cls, N: int) -> "WeightSpec":
        """Q = 1 - |x|^2, the default test weight (peak at the origin, Laplacian -2N)."""
        return cls.paraboloid(1.0, -2.0 * np.eye(N))

    def shifted(self, const: float) -> "WeightSpec":
        base = self
        profile = None if base.radial_profile is None else (lambda r: base.radial_profile(r) + const)
        return WeightSpec(
            self.dimension,
            lambda x: base.value(x) + const,
            base.gradient,
            base.hessian,
            base.peaks,
            base.name,
            profile,
        )

    def scaled(self, c: float) -> "WeightSpec":
        base = self
        profile = None if base.radial_profile is None else (lambda r: c * base.radial_profile(r))
        return WeightSpec(
            self.dimension,
            lambda x: c * base.value(x),
            lambda x: c * base.gradient(x),
            lambda x: c * base.hessian(x),
            base.peaks,
            base.name,
            profile,
        )

    def reflected(self) -> "WeightSpec":
        """x -> Q(-x)."""
        base = self
        return WeightSpec(
            self.dimension,
            lambda x: base.value(-np.asarray(x)),
            lambda x: -base.gradient(-np.asarray(x)),
            lambda x: base.hessian(-np.asarray(x)),
            tuple(-p for p in base.peaks),
            base.name,
            base.radial_profile,
        )

    def laplacian(self, x) -> np.ndarray:
        return np.trace(self.hessian(x), axis1=-2, axis2=-1)
