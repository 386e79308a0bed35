"""Calculus for axisymmetric functions on the round sphere S^{2n-1}.

Functions are represented by their values on a uniform grid in the
coordinate ``zeta = 1 - 2|z_1|^2`` (for n = 2 this is ``|z_2|^2 - |z_1|^2``).
In Hopf coordinates ``|z_1| = cos(eta)`` one has ``zeta = -cos(2 eta)``.

All operators are evaluated by their regular limits at ``zeta = +-1``: the
metric factor ``1 - zeta^2`` vanishes there analytically, so no ghost nodes
or boundary conditions are needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class ZetaGrid:
    """Uniform partition of [-1, 1] with an odd number of nodes."""

    n: int
    N: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"complex dimension must be >= 2, got n={self.n}")
        if self.N < 9:
            raise ValueError(f"grid too small for the stencils: N={self.N} < 9")
        if self.N % 2 == 0:
            raise ValueError(f"N must be odd so that zeta = 0 is a node, got N={self.N}")

    @cached_property
    def nodes(self) -> np.ndarray:
        z = np.linspace(-1.0, 1.0, self.N)
        z[self.N // 2] = 0.0
        return z

    @property
    def h(self) -> float:
        return 2.0 / (self.N - 1)

    @cached_property
    def d1_matrix(self) -> np.ndarray:
        return _derivative_matrix(self.N, self.h, 1)

    @cached_property
    def d2_matrix(self) -> np.ndarray:
        return _derivative_matrix(self.N, self.h, 2)

    @cached_property
    def quadrature_weights(self) -> np.ndarray:
        """Weights ``w`` with ``w @ u`` equal to the sphere integral of ``u``."""
        return sphere_volume_constant(self.n) * simpson_weights(self.N, self.h) * self.density

    @cached_property
    def density(self) -> np.ndarray:
        # push-forward of the round measure to zeta, up to sphere_volume_constant
        return ((1.0 + self.nodes) / 2.0) ** (self.n - 2)

    def profile(self, values) -> "AxiProfile":
        if callable(values):
            values = values(self.nodes)
        return AxiProfile(self, np.broadcast_to(np.asarray(values, dtype=float), (self.N,)).copy())


@dataclass(frozen=True)
class AxiProfile:
    """Node values of an axisymmetric scalar on a :class:`ZetaGrid`."""

    grid: ZetaGrid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.grid.N,):
            raise ValueError(f"profile has shape {self.values.shape}, grid has N={self.grid.N}")
        if not np.all(np.isfinite(self.values)):
            bad = int(np.flatnonzero(~np.isfinite(self.values))[0])
            raise ValueError(f"non-finite profile value at node {bad}")

    @property
    def zeta(self) -> np.ndarray:
        return self.grid.nodes

    def with_values(self, values) -> "AxiProfile":
        return AxiProfile(self.grid, np.asarray(values, dtype=float))


def fd_weights(offsets, order: int) -> np.ndarray:
    """Finite-difference weights on the given integer offsets (unit spacing)."""
    s = np.asarray(offsets, dtype=float)
    m = len(s)
    A = np.vander(s, m, increasing=True).T
    b = np.zeros(m)
    b[order] = math.factorial(order)
    return np.linalg.solve(A, b)


def _derivative_matrix(N: int, h: float, order: int) -> np.ndarray:
    D = np.zeros((N, N))
    centered = fd_weights([-2, -1, 0, 1, 2], order)
    for i in range(2, N - 2):
        D[i, i - 2:i + 3] = centered
    # two boundary bands, six-point one-sided stencils (at least fourth order)
    for i in (0, 1):
        D[i, 0:6] = fd_weights(np.arange(6) - i, order)
        j = N - 1 - i
        D[j, N - 6:N] = fd_weights(np.arange(N - 6, N) - j, order)
    return D / h**order


def simpson_weights(N: int, h: float) -> np.ndarray:
    if N % 2 == 0:
        raise ValueError("composite Simpson needs an odd node count")
    w = np.ones(N)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


def sphere_volume_constant(n: int) -> float:
    """``C_n`` in ``int_{S^{2n-1}} u = C_n int_{-1}^{1} u ((1+zeta)/2)^{n-2} dzeta``."""
    return math.pi**n / math.gamma(n - 1)


def sphere_volume(n: int) -> float:
    """Volume of the unit sphere S^{2n-1}."""
    return 2.0 * math.pi**n / math.gamma(n)


def differentiate(u: AxiProfile) -> tuple[AxiProfile, AxiProfile]:
    """First and second zeta-derivatives, fourth order on the whole grid."""
    g = u.grid
    return u.with_values(g.d1_matrix @ u.values), u.with_values(g.d2_matrix @ u.values)


def third_derivative(u: AxiProfile) -> AxiProfile:
    g = u.grid
    return u.with_values(g.d1_matrix @ (g.d2_matrix @ u.values))


# ---------------------------------------------------------------------------
# array kernels (zeta, u', u'') -> field; shared with the hypersurface code


def lap_kernel(zeta, n, d1, d2):
    return 4.0 * (1.0 - zeta**2) * d2 + (4.0 * (n - 2) - 4.0 * n * zeta) * d1


def grad2_kernel(zeta, d1):
    return 4.0 * (1.0 - zeta**2) * d1**2


def hessian_kernels(zeta, n, d1, d2, v):
    """Return ``(hgg, hess2, s2)`` for an axisymmetric function.

    ``u_eta`` is the derivative along the unit meridian ``e_eta``, which is an
    eigenvector of the round Hessian with eigenvalue ``u_etaeta``.
    """
    ueta2 = grad2_kernel(zeta, d1)
    uetaeta = 4.0 * (1.0 - zeta**2) * d2 - 4.0 * zeta * d1
    hgg = ueta2 * uetaeta
    hess2 = (uetaeta**2 + 4.0 * (1.0 + zeta) ** 2 * d1**2
             + 4.0 * (2 * n - 3) * (1.0 - zeta) ** 2 * d1**2)
    s2 = hess2 - ueta2 * uetaeta**2 * (2.0 * v**2 - ueta2) / v**4
    return hgg, hess2, s2


# ---------------------------------------------------------------------------
# profile-level operators


def laplacian_sigma(u: AxiProfile) -> AxiProfile:
    d1, d2 = differentiate(u)
    return u.with_values(lap_kernel(u.zeta, u.grid.n, d1.values, d2.values))


def gradient_sq_sigma(u: AxiProfile) -> AxiProfile:
    d1, _ = differentiate(u)
    return u.with_values(grad2_kernel(u.zeta, d1.values))


def hessian_contractions(u: AxiProfile, v: AxiProfile | None = None):
    """Hessian contractions ``Hess u(grad u, grad u)``, ``|Hess u|^2`` and the
    double contraction against ``sigma^{ij} - u^i u^j / v^2``.

    ``v`` defaults to ``sqrt(1 + |grad u|^2)``, the slope factor of a graph.
    """
    d1, d2 = differentiate(u)
    if v is None:
        vv = np.sqrt(1.0 + grad2_kernel(u.zeta, d1.values))
    else:
        vv = v.values
        if np.any(vv < 1.0):
            bad = int(np.flatnonzero(vv < 1.0)[0])
            raise ValueError(f"slope factor v < 1 at node {bad}")
    hgg, hess2, s2 = hessian_kernels(u.zeta, u.grid.n, d1.values, d2.values, vv)
    return u.with_values(hgg), u.with_values(hess2), u.with_values(s2)


def frame_hessian(u: AxiProfile, mu: float = 1.0) -> np.ndarray:
    """Per-node Hessian matrices in the adapted frame ``(xi, e_eta, J e_eta, ...)``.

    ``mu = 1`` gives the round Hessian; other values give the Hessian with
    respect to the Berger metric with Hopf length ``mu``: the ``xi xi`` entry
    vanishes and the mixed ``xi`` entries are scaled by ``mu``.
    """
    n = u.grid.n
    z = u.zeta
    d1, d2 = differentiate(u)
    u1, u2 = d1.values, d2.values
    m = 2 * n - 1
    Hm = np.zeros((u.grid.N, m, m))
    Hm[:, 1, 1] = 4.0 * (1.0 - z**2) * u2 - 4.0 * z * u1
    mixed = 2.0 * np.sqrt(np.clip(1.0 - z**2, 0.0, None)) * u1
    Hm[:, 0, 2] = Hm[:, 2, 0] = mu * mixed
    Hm[:, 2, 2] = -4.0 * z * u1
    for k in range(3, m):
        Hm[:, k, k] = 2.0 * (1.0 - z) * u1
    return Hm


def berger_identities_residual(u: AxiProfile, mu: float) -> tuple[float, float]:
    """Max residuals of ``Lap_e u = Lap_sigma u`` and
    ``|Hess_e u|_e^2 = |Hess_sigma u|^2 + 2 (mu - 1) |grad u|^2``.
    """
    if mu < 1.0:
        raise ValueError(f"Berger parameter must be >= 1, got {mu}")
    Hb = frame_hessian(u, mu)
    m = Hb.shape[1]
    einv = np.ones(m)
    einv[0] = 1.0 / mu
    lap_e = np.einsum("i,nii->n", einv, Hb)
    norm_e = np.einsum("i,j,nij,nij->n", einv, einv, Hb, Hb)
    lap = laplacian_sigma(u).values
    _, hess2, _ = hessian_contractions(u)
    grad2 = gradient_sq_sigma(u).values
    scale = 1.0 + np.max(np.abs(hess2.values)) + 2.0 * (mu - 1.0) * np.max(grad2)
    r1 = float(np.max(np.abs(lap_e - lap)) / (1.0 + np.max(np.abs(lap))))
    r2 = float(np.max(np.abs(norm_e - hess2.values - 2.0 * (mu - 1.0) * grad2)) / scale)
    return r1, r2


def integrate_sphere(u: AxiProfile) -> float:
    return float(u.grid.quadrature_weights @ u.values)


# ---------------------------------------------------------------------------
# independent oracle in explicit Hopf coordinates (n = 2)


def local_interpolant(u: AxiProfile, zeta0: float) -> Callable[[float], float]:
    """Degree-6 Lagrange interpolant of ``u`` on the seven nodes nearest ``zeta0``."""
    z = u.zeta
    i = int(np.clip(np.searchsorted(z, zeta0) - 3, 0, len(z) - 7))
    xs, ys = z[i:i + 7], u.values[i:i + 7]

    def f(x):
        total = 0.0
        for j in range(7):
            others = np.delete(xs, j)
            total += ys[j] * np.prod((x - others) / (xs[j] - others))
        return total
    return f


def round_s3_metric(x) -> np.ndarray:
    eta = x[0]
    return np.diag([1.0, math.cos(eta) ** 2, math.sin(eta) ** 2])


def christoffel_fd(metric: Callable, x, h: float = 1e-5) -> np.ndarray:
    """Christoffel symbols ``Gamma[k, i, j]`` by central differences of ``metric``."""
    x = np.asarray(x, dtype=float)
    d = len(x)
    g = metric(x)
    ginv = np.linalg.inv(g)
    dg = np.zeros((d, d, d))  # dg[k] = d g / d x^k
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        dg[k] = (metric(x + e) - metric(x - e)) / (2 * h)
    # Gamma^k_ij = 1/2 g^{kl} (d_i g_lj + d_j g_li - d_l g_ij)
    t = np.einsum("ilj->lij", dg) + np.einsum("jli->lij", dg) - dg
    return 0.5 * np.einsum("kl,lij->kij", ginv, t)


def _oracle_tensors(u, zeta: float, h_fd: float, extrapolate: bool = True):
    """Gradient, covariant Hessian and inverse metric of ``u`` at the S^3 point over ``zeta``.

    With ``extrapolate`` the second-order differences at ``h_fd`` and
    ``h_fd/2`` are combined by Richardson extrapolation (fourth order).
    """
    if extrapolate:
        g1, c1, ginv = _oracle_tensors(u, zeta, h_fd, False)
        g2, c2, _ = _oracle_tensors(u, zeta, 0.5 * h_fd, False)
        return (4 * g2 - g1) / 3, (4 * c2 - c1) / 3, ginv
    if not callable(u) and u.grid.n != 2:
        raise ValueError("fd_oracle works on S^3 (n = 2) only")
    eta0 = math.acos(math.sqrt((1.0 - zeta) / 2.0))
    if min(eta0, math.pi / 2 - eta0) < 100 * h_fd:
        raise ValueError(f"zeta={zeta} too close to the coordinate degeneracy at +-1")
    fz = u if callable(u) else local_interpolant(u, zeta)

    def F(x):
        return fz(-math.cos(2.0 * x[0]))

    x0 = np.array([eta0, 0.3, 1.1])
    d = 3
    grad = np.zeros(d)
    hess = np.zeros((d, d))
    f0 = F(x0)
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = h_fd
        fp, fm = F(x0 + ei), F(x0 - ei)
        grad[i] = (fp - fm) / (2 * h_fd)
        hess[i, i] = (fp - 2 * f0 + fm) / h_fd**2
        for j in range(i + 1, d):
            ej = np.zeros(d)
            ej[j] = h_fd
            hess[i, j] = hess[j, i] = (F(x0 + ei + ej) - F(x0 + ei - ej)
                                       - F(x0 - ei + ej) + F(x0 - ei - ej)) / (4 * h_fd**2)
    gam = christoffel_fd(round_s3_metric, x0)
    cov = hess - np.einsum("kij,k->ij", gam, grad)
    return grad, cov, np.linalg.inv(round_s3_metric(x0))


def fd_oracle(u, zeta: float, h_fd: float = 1e-3,
              extrapolate: bool = True) -> tuple[float, float, float]:
    """Laplacian, squared gradient and squared Hessian norm of ``u`` on S^3.

    Evaluated at the point with ``eta = arccos(sqrt((1 - zeta)/2))`` by second
    order differences in the coordinates ``(eta, xi1, xi2)`` of the round
    metric ``d eta^2 + cos^2 eta d xi1^2 + sin^2 eta d xi2^2``.  ``u`` is a
    callable of zeta or an :class:`AxiProfile` on an n = 2 grid.  By default
    the differences at steps ``h_fd`` and ``h_fd/2`` are Richardson-combined.
    """
    grad, cov, ginv = _oracle_tensors(u, zeta, h_fd, extrapolate)
    lap = float(np.einsum("ij,ij->", ginv, cov))
    grad2 = float(grad @ ginv @ grad)
    hess2 = float(np.einsum("ia,jb,ij,ab->", ginv, ginv, cov, cov))
    return lap, grad2, hess2


def fd_oracle_contraction(u, zeta: float, v: float, h_fd: float = 1e-3,
                          extrapolate: bool = True) -> float:
    """``u_ij u_kh s^jk s^hi`` with ``s^ij = sigma^ij - u^i u^j / v^2``, by the same oracle."""
    grad, cov, ginv = _oracle_tensors(u, zeta, h_fd, extrapolate)
    up = ginv @ grad
    st = ginv - np.outer(up, up) / v**2
    return float(np.einsum("ij,kh,jk,hi->", cov, cov, st, st))
