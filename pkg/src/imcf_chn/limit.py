"""Sub-Riemannian limit of the flow: the limit functional J(f), the
Webster-flatness criterion and the linear conformal factors ``f_k = k zeta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .bessel import bessel_I_scaled
from .sphere import (AxiProfile, ZetaGrid, gradient_sq_sigma, integrate_sphere,
                     laplacian_sigma)


@dataclass(frozen=True)
class ConformalFactor:
    """Conformal factor ``f`` of the limit metric ``e^{2f} sigma_sR``."""

    f: AxiProfile

    @property
    def n(self) -> int:
        return self.f.grid.n


def _factor(f) -> ConformalFactor:
    return f if isinstance(f, ConformalFactor) else ConformalFactor(f)


def lq_functional(f: ConformalFactor | AxiProfile) -> float:
    """``(int e^{2nf})^{-1+1/n} int e^{2nf} (e^{-f} Lap e^{-f} - n |grad e^{-f}|^2)``."""
    cf = _factor(f)
    n, prof = cf.n, cf.f
    u = prof.with_values(np.exp(-prof.values))
    weight = np.exp(2 * n * prof.values)
    integrand = weight * (u.values * laplacian_sigma(u).values - n * gradient_sq_sigma(u).values)
    vol = integrate_sphere(prof.with_values(weight))
    return vol ** (-1.0 + 1.0 / n) * integrate_sphere(prof.with_values(integrand))


def lq_functional_by_parts(f: ConformalFactor | AxiProfile) -> float:
    """The same functional after one integration by parts,
    ``(n-1) (int e^{2nf})^{-1+1/n} int e^{(2n-2)f} |grad f|^2``.  Manifestly
    nonnegative; used as an independent check."""
    cf = _factor(f)
    n, prof = cf.n, cf.f
    vol = integrate_sphere(prof.with_values(np.exp(2 * n * prof.values)))
    body = np.exp((2 * n - 2) * prof.values) * gradient_sq_sigma(prof).values
    return (n - 1) * vol ** (-1.0 + 1.0 / n) * integrate_sphere(prof.with_values(body))


def webster_flatness_residual(f: ConformalFactor | AxiProfile) -> float:
    """Oscillation ``max f - min f``.  For S^1-invariant factors the limit
    contact form has constant Webster curvature exactly when this vanishes."""
    vals = _factor(f).f.values
    return float(vals.max() - vals.min())


def fk_identity_sides(k: float, grid: ZetaGrid, method: str = "chain") -> tuple[np.ndarray, np.ndarray]:
    """Both sides of
    ``e^{4f}(e^{-f} Lap e^{-f} - 2 |grad e^{-f}|^2) = 4k e^{2f}(k zeta^2 + 2 zeta - k)``
    for ``f = k zeta`` on S^3, the left side with the discrete operators.

    ``method="chain"`` applies the operators to ``f`` through
    ``e^{-f} Lap e^{-f} = e^{-2f}(|grad f|^2 - Lap f)`` and
    ``|grad e^{-f}|^2 = e^{-2f}|grad f|^2``; ``method="literal"`` differences
    ``e^{-f}`` itself, whose error grows like ``(k h)^4``.
    """
    if grid.n != 2:
        raise ValueError("the linear-factor identity is stated on S^3 (n = 2)")
    z = grid.nodes
    if method == "chain":
        f = grid.profile(k * z)
        g2 = gradient_sq_sigma(f).values
        lhs = np.exp(2 * k * z) * (-laplacian_sigma(f).values - g2)
    elif method == "literal":
        u = grid.profile(np.exp(-k * z))
        lhs = np.exp(4 * k * z) * (u.values * laplacian_sigma(u).values
                                   - 2.0 * gradient_sq_sigma(u).values)
    else:
        raise ValueError(f"unknown method {method!r}")
    rhs = 4.0 * k * np.exp(2 * k * z) * (k * z**2 + 2.0 * z - k)
    return lhs, rhs


def fk_identity_residual(k: float, grid: ZetaGrid, method: str = "chain") -> float:
    """Max pointwise gap of :func:`fk_identity_sides`, relative to ``max |rhs|``."""
    if not k > 0:
        raise ValueError("k must be positive")
    lhs, rhs = fk_identity_sides(k, grid, method)
    return float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)))


# ---------------------------------------------------------------------------
# growth of Q_k = J(k zeta)


def qk_paper(k: float) -> float:
    """Closed form ``k (pi/(4k) I_1(4k))^{-1/2} (pi/(4k)) I_2(2k)`` with the
    exponentials divided out (they cancel exactly)."""
    a = math.pi / (4.0 * k)
    return k * a * bessel_I_scaled(2, 2 * k) / math.sqrt(a * bessel_I_scaled(1, 4 * k))


def _weighted(fn, k, weight):
    if weight == "paper":
        val, _ = integrate.quad(fn, -1.0, 1.0, weight="alg", wvar=(0.5, 0.5),
                                epsabs=0.0, epsrel=1e-13, limit=200)
    else:
        # the integrands concentrate in a layer of width ~1/k at zeta = 1
        points = [1.0 - 1.0 / k] if k > 1 else None
        val, _ = integrate.quad(fn, -1.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200,
                                points=points)
    return val


def qk_quadrature(k: float, density: str) -> float:
    """``Q_k`` up to a constant by direct quadrature with ``density`` either
    ``"paper"`` (``sqrt(1 - zeta^2)``) or ``"derived"`` (constant, the round
    S^3 measure).

    With ``A = int e^{4k zeta}`` and ``B = int e^{2k zeta}(k zeta^2 + 2 zeta - k)``
    the functional is ``A^{-1/2} 4k B`` up to volume constants; both
    exponentials are shifted by their maxima, which cancel.
    """
    A = _weighted(lambda z: np.exp(4 * k * (z - 1.0)), k, density)
    B = _weighted(lambda z: np.exp(2 * k * (z - 1.0)) * (k * z * z + 2 * z - k), k, density)
    return k * B / math.sqrt(A)


def growth_exponent(ks, qs) -> float:
    slope, _ = np.polyfit(np.log(np.asarray(ks, float)), np.log(np.asarray(qs, float)), 1)
    return float(slope)


@dataclass
class QkTable:
    k: np.ndarray
    paper: np.ndarray
    quad_paper_density: np.ndarray
    quad_derived_density: np.ndarray

    @property
    def exponents(self) -> tuple[float, float, float]:
        return tuple(growth_exponent(self.k, col) for col in
                     (self.paper, self.quad_paper_density, self.quad_derived_density))

    @property
    def ratio(self) -> np.ndarray:
        return self.paper / self.quad_paper_density


def qk_study(k_list) -> QkTable:
    ks = np.asarray(k_list, dtype=float)
    if ks.size == 0 or np.any(ks <= 0) or np.any(np.diff(ks) <= 0):
        raise ValueError("k_list must be positive and strictly increasing")
    return QkTable(
        k=ks,
        paper=np.array([qk_paper(k) for k in ks]),
        quad_paper_density=np.array([qk_quadrature(k, "paper") for k in ks]),
        quad_derived_density=np.array([qk_quadrature(k, "derived") for k in ks]),
    )
