"""Extrinsic geometry of S^1-invariant star-shaped hypersurfaces in CH^n.

The hypersurface is the radial graph ``rho(zeta)`` over the geodesic
spheres about the origin.  Derivatives are taken of the auxiliary function
``phi(rho)`` with ``d phi / d rho = 1 / sinh(rho)``, for which the graph
slope factor is ``v = sqrt(1 + |grad phi|^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import ambient
from .sphere import (AxiProfile, christoffel_fd, differentiate, grad2_kernel,
                     hessian_kernels, lap_kernel, local_interpolant)


@dataclass(frozen=True)
class GeometryFields:
    """Per-node extrinsic quantities of a radial graph plus area and Q.

    The per-node arrays share the node ordering of the profile grid.
    ``H_minus_hatH`` and ``H_minus_2n`` are evaluated without cancellation,
    so they stay accurate when ``rho`` is large.
    """

    v: np.ndarray
    H: np.ndarray
    hatH: np.ndarray
    A2: np.ndarray
    area_density: np.ndarray
    dev_full: np.ndarray
    dev_horiz: np.ndarray
    theta_factor: np.ndarray
    theta_horiz: np.ndarray
    H_minus_hatH: np.ndarray
    H_minus_2n: np.ndarray
    grad_phi2: np.ndarray
    hess_phi2: np.ndarray
    area: float
    Q: float


def _check_positive(rho: AxiProfile) -> np.ndarray:
    r = rho.values
    if np.any(r <= 0):
        bad = int(np.flatnonzero(r <= 0)[0])
        raise ValueError(f"radial function must be positive, rho={r[bad]} at node {bad}")
    return r


def phi_chain(rho: AxiProfile) -> tuple[AxiProfile, AxiProfile, AxiProfile]:
    """Zeta-derivatives of ``phi(rho(zeta))`` and the slope factor ``v``."""
    r = _check_positive(rho)
    d1, d2 = differentiate(rho)
    s, c = np.sinh(r), np.cosh(r)
    p1 = d1.values / s
    p2 = d2.values / s - c * d1.values**2 / s**2
    v = np.sqrt(1.0 + grad2_kernel(rho.zeta, p1))
    return rho.with_values(p1), rho.with_values(p2), rho.with_values(v)


def _fields(rho: AxiProfile) -> dict:
    r = _check_positive(rho)
    z, n = rho.zeta, rho.grid.n
    p1, p2, v = (p.values for p in phi_chain(rho))
    s, c = np.sinh(r), np.cosh(r)
    grad2 = grad2_kernel(z, p1)
    lap = lap_kernel(z, n, p1, p2)
    hgg, hess2, s2 = hessian_kernels(z, n, p1, p2, v)
    hatH = ambient.hat_H(r, n)
    # trace of the phi-Hessian against sigma^{ij} - phi^i phi^j / v^2
    trace = lap - hgg / v**2
    H_vs = -trace / (v * s)                       # H - hatH / v
    H_minus_hatH = H_vs - hatH * grad2 / (v * (v + 1.0))
    H = hatH + H_minus_hatH
    bad = ~np.isfinite(H)
    if np.any(bad):
        raise FloatingPointError(f"non-finite mean curvature at node {int(np.flatnonzero(bad)[0])}")
    A2 = ((s2 + 2.0 * s**2 * grad2) / (v**2 * s**2) + 2.0 * c / (v * s) * H_vs
          + (2 * n - 1) * c**2 / (v**2 * s**2) + s**2 / (v**2 * c**2) + 2.0 / v**2)
    slope = grad2 / (v * (1.0 + v))               # 1 - 1/v
    alpha = ambient.coth_m1(r) / v - slope        # cosh/(v sinh) - 1
    beta = ambient.tanh_m1(r) / v - slope         # sinh/(v cosh) - 1
    dev_full = (s2 / (v**2 * s**2) + 2.0 * grad2 / v**2 + 2.0 * H_vs * alpha
                + (2 * n - 1) * alpha**2 + beta**2 + 2.0 * alpha * beta)
    dev_horiz = s2 / (v**2 * s**2) + 2.0 * H_vs * alpha + (2 * n - 2) * alpha**2
    return dict(v=v, H=H, hatH=hatH, A2=A2, H_vs=H_vs, H_minus_hatH=H_minus_hatH,
                H_minus_2n=H_minus_hatH + ambient.hat_H_minus_2n(r, n),
                dev_full=dev_full, dev_horiz=dev_horiz, grad_phi2=grad2, hess_phi2=hess2,
                area_density=v * s ** (2 * n - 1) * c,
                theta_factor=s * c / v, theta_horiz=s * np.sqrt(grad2) / v)


def mean_curvature(rho: AxiProfile) -> tuple[AxiProfile, AxiProfile]:
    """Mean curvature ``H`` of the graph and ``hatH(rho)`` nodewise."""
    f = _fields(rho)
    return rho.with_values(f["H"]), rho.with_values(f["hatH"])


def norm_A_squared(rho: AxiProfile) -> AxiProfile:
    """Squared norm of the second fundamental form."""
    return rho.with_values(_fields(rho)["A2"])


def deviation_norms(rho: AxiProfile) -> tuple[AxiProfile, AxiProfile]:
    """Squared deviation of the shape operator from the horosphere model
    ``diag(2, 1, ..., 1)``, on the full tangent space and on the horizontal
    distribution."""
    f = _fields(rho)
    return rho.with_values(f["dev_full"]), rho.with_values(f["dev_horiz"])


def area_and_Q(rho: AxiProfile) -> tuple[float, float, AxiProfile]:
    g = geometry(rho)
    return g.area, g.Q, rho.with_values(g.theta_factor)


def geometry(rho: AxiProfile) -> GeometryFields:
    """All extrinsic fields of the graph of ``rho`` in one pass."""
    f = _fields(rho)
    w = rho.grid.quadrature_weights
    n = rho.grid.n
    area = float(w @ f["area_density"])
    Q = area ** (-1.0 + 1.0 / n) * float(w @ (f["H_minus_hatH"] * f["area_density"]))
    keep = {k: f[k] for k in GeometryFields.__dataclass_fields__ if k in f}
    return GeometryFields(area=area, Q=Q, **keep)


# ---------------------------------------------------------------------------
# embedding oracle, n = 2


def extrinsic_oracle(rho, zetas, h_fd: float = 1e-4) -> tuple[np.ndarray, np.ndarray]:
    """Mean curvature and ``|A|^2`` from the embedding in polar coordinates.

    The graph ``(eta, xi1, xi2) -> (rho(zeta(eta)), eta, xi1, xi2)`` is
    differentiated numerically and the Christoffel symbols are obtained by
    differencing the Bergman metric, so nothing is shared with the closed
    forms above.  ``rho`` is a callable of zeta or an n = 2 profile.
    """
    if not callable(rho) and rho.grid.n != 2:
        raise ValueError("extrinsic_oracle works in CH^2 only")
    zetas = np.atleast_1d(np.asarray(zetas, dtype=float))
    Hs, A2s = np.empty(zetas.size), np.empty(zetas.size)
    for idx, zeta in enumerate(zetas):
        eta0 = math.acos(math.sqrt((1.0 - zeta) / 2.0))
        if min(eta0, math.pi / 2 - eta0) < 100 * h_fd:
            raise ValueError(f"zeta={zeta} too close to the coordinate degeneracy at +-1")
        fz: Callable = rho if callable(rho) else local_interpolant(rho, zeta)

        def radial(eta):
            return fz(-math.cos(2.0 * eta))

        r0, rp, rm = radial(eta0), radial(eta0 + h_fd), radial(eta0 - h_fd)
        r_eta = (rp - rm) / (2 * h_fd)
        r_etaeta = (rp - 2 * r0 + rm) / h_fd**2
        X = np.array([r0, eta0, 0.3, 1.1])
        gbar = ambient.bergman_metric_array(X)
        gam = christoffel_fd(ambient.bergman_metric_array, X)
        # tangent vectors dF/dy^i as columns, y = (eta, xi1, xi2)
        T = np.zeros((4, 3))
        T[:, 0] = [r_eta, 1.0, 0.0, 0.0]
        T[2, 1] = 1.0
        T[3, 2] = 1.0
        second = np.zeros((4, 3, 3))
        second[0, 0, 0] = r_etaeta
        cov = second + np.einsum("abc,bi,cj->aij", gam, T, T)
        normal_form = np.array([1.0, -r_eta, 0.0, 0.0])
        nu = np.linalg.solve(gbar, normal_form)
        nu /= math.sqrt(normal_form @ nu)
        h = -np.einsum("ab,aij,b->ij", gbar, cov, nu)
        ginv = np.linalg.inv(T.T @ gbar @ T)
        shape = ginv @ h
        Hs[idx] = np.trace(shape)
        A2s[idx] = np.trace(shape @ shape)
    return Hs, A2s
