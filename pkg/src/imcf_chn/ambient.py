"""Closed-form geometry of complex hyperbolic space CH^n.

Tangent vectors live in an orthonormal frame where the complex structure
acts as a rotation on consecutive coordinate pairs, ``J e_{2r} = e_{2r+1}``.
The polar model uses the Bergman metric
``d rho^2 + sinh^2(rho) e_{cosh^2 rho}`` where ``e_mu`` is the Berger
deformation of the round sphere that scales the Hopf direction by ``mu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AmbientVector:
    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim != 1 or c.size < 4 or c.size % 2:
            raise ValueError(f"ambient vectors need an even length 2n >= 4, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("ambient vector has non-finite entries")
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return self.coords.size // 2

    def J(self) -> "AmbientVector":
        return AmbientVector(complex_structure(self.coords))


@dataclass(frozen=True)
class PolarPoint:
    """Point of CH^2 in polar Hopf coordinates ``(rho, eta, xi1, xi2)``."""

    rho: float
    eta: float
    xi1: float = 0.0
    xi2: float = 0.0

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if not 0.0 <= self.eta <= math.pi / 2:
            raise ValueError(f"eta must lie in [0, pi/2], got {self.eta}")
        for name in ("xi1", "xi2"):
            val = getattr(self, name)
            if not 0.0 <= val < 2 * math.pi:
                raise ValueError(f"{name} must lie in [0, 2 pi), got {val}")

    def as_array(self) -> np.ndarray:
        return np.array([self.rho, self.eta, self.xi1, self.xi2])


def complex_structure(x: np.ndarray) -> np.ndarray:
    """Apply J to the last axis: ``(a, b) -> (-b, a)`` on each pair."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    out[..., 0::2] = -x[..., 1::2]
    out[..., 1::2] = x[..., 0::2]
    return out


def _coords(X) -> np.ndarray:
    return X.coords if isinstance(X, AmbientVector) else AmbientVector(X).coords


def chn_curvature(X, Y, Z, W) -> float:
    """Riemann tensor ``R(X, Y, Z, W)`` of CH^n (holomorphic curvature -4)."""
    x, y, z, w = (_coords(a) for a in (X, Y, Z, W))
    if not (x.size == y.size == z.size == w.size):
        raise ValueError(f"dimension mismatch: {x.size}, {y.size}, {z.size}, {w.size}")
    jz, jw, jy = complex_structure(z), complex_structure(w), complex_structure(y)
    return float(-(x @ z) * (y @ w) + (x @ w) * (y @ z)
                 - (x @ jz) * (y @ jw) + (x @ jw) * (y @ jz)
                 - 2.0 * (x @ jy) * (z @ jw))


def sectional_curvature(X, Y) -> float:
    """Sectional curvature of the plane spanned by ``X`` and ``Y``."""
    x, y = _coords(X), _coords(Y)
    if x.size != y.size:
        raise ValueError(f"dimension mismatch: {x.size}, {y.size}")
    nx = np.linalg.norm(x)
    if nx == 0:
        raise ValueError("degenerate pair: zero vector")
    e1 = x / nx
    y_perp = y - (y @ e1) * e1
    ny = np.linalg.norm(y_perp)
    if ny <= 1e-12 * max(1.0, np.linalg.norm(y)):
        raise ValueError("degenerate pair: vectors are parallel")
    e2 = y_perp / ny
    return -1.0 - 3.0 * float(e1 @ complex_structure(e2)) ** 2


def ricci_tensor(n: int, frame: np.ndarray | None = None) -> np.ndarray:
    """Ricci tensor ``Ric(Y, W) = sum_i R(E_i, Y, E_i, W)`` in the basis ``frame``."""
    E = np.eye(2 * n) if frame is None else np.asarray(frame, dtype=float)
    m = 2 * n
    ric = np.zeros((m, m))
    for a in range(m):
        for b in range(m):
            ric[a, b] = sum(chn_curvature(E[i], E[a], E[i], E[b]) for i in range(m))
    return ric


def einstein_residual(n: int, frame: np.ndarray | None = None) -> float:
    """Max deviation of the Ricci tensor from ``-2(n+1)`` times the metric."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    ric = ricci_tensor(n, frame)
    return float(np.max(np.abs(ric + 2.0 * (n + 1) * np.eye(2 * n))))


# ---------------------------------------------------------------------------
# geodesic spheres


def _check_rho(rho):
    r = np.asarray(rho, dtype=float)
    if np.any(~(r > 0)):
        raise ValueError("rho must be positive")
    return r


def hat_H(rho, n: int):
    """Mean curvature of the geodesic sphere of radius ``rho``."""
    r = _check_rho(rho)
    c, s = np.cosh(r), np.sinh(r)
    out = (2 * n * c**2 - 1.0) / (s * c)
    return float(out) if out.ndim == 0 else out


def sphere_principal_curvatures(rho):
    """Principal curvatures ``(lambda, mu)`` of the geodesic sphere of radius ``rho``.

    ``lambda = coth(rho)`` on the horizontal directions (multiplicity 2n-2)
    and ``mu = 2 coth(2 rho)`` on the Hopf direction.
    """
    r = _check_rho(rho)
    lam = 1.0 / np.tanh(r)
    mu = 2.0 / np.tanh(2.0 * r)
    if lam.ndim == 0:
        return float(lam), float(mu)
    return lam, mu


# precision helpers for large radii, where coth and tanh are 1 to machine
# precision and the deviations must be kept from cancelling


def log_sinh(rho):
    r = np.asarray(rho, dtype=float)
    return r + np.log1p(-np.exp(-2.0 * r)) - math.log(2.0)


def log_cosh(rho):
    r = np.asarray(rho, dtype=float)
    return r + np.log1p(np.exp(-2.0 * r)) - math.log(2.0)


def coth_m1(rho):
    """``coth(rho) - 1`` without cancellation."""
    return 2.0 / np.expm1(2.0 * np.asarray(rho, dtype=float))


def tanh_m1(rho):
    """``tanh(rho) - 1`` without cancellation."""
    return -2.0 / (np.exp(2.0 * np.asarray(rho, dtype=float)) + 1.0)


def hat_H_minus_2n(rho, n: int):
    return (2 * n - 1) * coth_m1(rho) + tanh_m1(rho)


# ---------------------------------------------------------------------------
# polar model, n = 2


def bergman_metric_array(x) -> np.ndarray:
    """Bergman metric of CH^2 at coordinates ``(rho, eta, xi1, xi2)`` (no validation)."""
    rho, eta = x[0], x[1]
    s2 = math.sinh(rho) ** 2
    c2e, s2e = math.cos(eta) ** 2, math.sin(eta) ** 2
    g = np.zeros((4, 4))
    g[0, 0] = 1.0
    g[1, 1] = s2
    hopf = np.array([c2e, s2e])  # Hopf one-form in (d xi1, d xi2)
    g[2:, 2:] = s2 * (np.diag([c2e, s2e]) + (math.cosh(rho) ** 2 - 1.0) * np.outer(hopf, hopf))
    return g


def bergman_components(p: PolarPoint) -> np.ndarray:
    if not isinstance(p, PolarPoint):
        p = PolarPoint(*p)
    return bergman_metric_array(p.as_array())


def berger_sphere_metric(eta: float, mu: float) -> np.ndarray:
    """Berger metric ``e_mu`` on S^3 in coordinates ``(eta, xi1, xi2)``."""
    c2e, s2e = math.cos(eta) ** 2, math.sin(eta) ** 2
    g = np.zeros((3, 3))
    g[0, 0] = 1.0
    hopf = np.array([c2e, s2e])
    g[1:, 1:] = np.diag([c2e, s2e]) + (mu - 1.0) * np.outer(hopf, hopf)
    return g
