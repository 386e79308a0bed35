import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from imcf_chn import sphere
from imcf_chn.sphere import AxiProfile, ZetaGrid

PROFILES = [lambda z: z, lambda z: z**2, np.exp, lambda z: np.sin(3 * z)]


def test_grid_invariants():
    g = ZetaGrid(2, 201)
    z = g.nodes
    assert z[0] == -1.0 and z[-1] == 1.0 and z[100] == 0.0
    assert np.all(np.diff(z) > 0)
    assert g.h == pytest.approx(0.01)
    with pytest.raises(ValueError, match="odd"):
        ZetaGrid(2, 200)
    with pytest.raises(ValueError, match="too small"):
        ZetaGrid(2, 7)
    with pytest.raises(ValueError):
        ZetaGrid(1, 33)


def test_profile_validation():
    g = ZetaGrid(2, 33)
    with pytest.raises(ValueError, match="shape"):
        AxiProfile(g, np.zeros(10))
    with pytest.raises(ValueError, match="non-finite"):
        g.profile(np.where(g.nodes > 0.5, np.nan, 1.0))


@pytest.mark.parametrize("N", [9, 33, 201])
def test_polynomial_exactness(N):
    g = ZetaGrid(2, N)
    z = g.nodes
    for p in range(5):
        d1, d2 = sphere.differentiate(g.profile(z**p))
        e1 = p * z ** max(p - 1, 0) if p else 0 * z
        e2 = p * (p - 1) * z ** max(p - 2, 0) if p > 1 else 0 * z
        assert np.max(np.abs(d1.values - e1)) <= 1e-10 * max(1, np.max(np.abs(e1)))
        assert np.max(np.abs(d2.values - e2)) <= 1e-10 * max(1, np.max(np.abs(e2)))


def test_constant_profile_derivatives_vanish():
    g = ZetaGrid(3, 101)
    d1, d2 = sphere.differentiate(g.profile(2.5))
    assert np.max(np.abs(d1.values)) < 1e-11 and np.max(np.abs(d2.values)) < 1e-9


def test_fourth_order_refinement():
    errs = []
    for N in (51, 101, 201):
        g = ZetaGrid(2, N)
        d1, d2 = sphere.differentiate(g.profile(np.exp))
        errs.append(max(np.max(np.abs(d1.values - np.exp(g.nodes))), np.max(np.abs(d2.values - np.exp(g.nodes)))))
    slopes = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(slopes > 3.5), slopes


def test_laplacian_examples():
    g = ZetaGrid(2, 201)
    z = g.nodes
    np.testing.assert_allclose(sphere.laplacian_sigma(g.profile(z)).values, -8 * z, atol=1e-11)
    assert np.max(np.abs(sphere.laplacian_sigma(g.profile(3.0)).values)) < 1e-9


def test_linearized_linear_factor_identity():
    # at first order in k the identity for f = k zeta reads -Lap f = 4k (2 zeta) on S^3
    g = ZetaGrid(2, 201)
    z = g.nodes
    k = 1e-6
    lap = sphere.laplacian_sigma(g.profile(k * z)).values
    np.testing.assert_allclose(-lap, 8 * k * z, atol=1e-15)


def test_gradient_sq():
    g = ZetaGrid(2, 201)
    z = g.nodes
    np.testing.assert_allclose(sphere.gradient_sq_sigma(g.profile(z)).values, 4 * (1 - z**2), atol=1e-12)
    for f in PROFILES:
        gr = sphere.gradient_sq_sigma(g.profile(f)).values
        assert gr[0] == 0.0 and gr[-1] == 0.0 and np.all(gr >= 0)


def test_fd_oracle_basic():
    assert sphere.fd_oracle(lambda z: 1.0 + 0 * z, 0.2) == pytest.approx((0, 0, 0), abs=1e-6)
    lap, grad2, _ = sphere.fd_oracle(lambda z: z, 0.0)
    assert lap == pytest.approx(0.0, abs=1e-6)
    assert grad2 == pytest.approx(4.0, rel=1e-7)
    with pytest.raises(ValueError, match="degeneracy"):
        sphere.fd_oracle(lambda z: z, 1.0 - 1e-9)
    with pytest.raises(ValueError, match="S\\^3"):
        sphere.fd_oracle(ZetaGrid(3, 33).profile(1.0), 0.0)


def test_fd_oracle_matches_closed_forms_cubic():
    g = ZetaGrid(2, 201)
    f = lambda z: z**3
    lap, grad2, hess2 = sphere.fd_oracle(f, 0.37)
    z0 = 0.37
    # closed forms evaluated with exact derivatives of zeta^3
    d1, d2 = 3 * z0**2, 6 * z0
    _, h2, _ = sphere.hessian_kernels(z0, 2, d1, d2, 1.0)
    assert lap == pytest.approx(sphere.lap_kernel(z0, 2, d1, d2), abs=1e-5)
    assert grad2 == pytest.approx(sphere.grad2_kernel(z0, d1), abs=1e-5)
    assert hess2 == pytest.approx(h2, abs=1e-5)
    # the profile path through the grid interpolant agrees too
    assert sphere.fd_oracle(g.profile(f), 0.37)[0] == pytest.approx(lap, abs=1e-5)


def test_fd_oracle_twenty_nodes():
    g = ZetaGrid(2, 201)
    u = g.profile(lambda z: z)
    lap = sphere.laplacian_sigma(u).values
    hgg, h2, s2 = sphere.hessian_contractions(u, g.profile(1.0))
    for i in np.linspace(15, 185, 20).astype(int):
        o = sphere.fd_oracle(lambda z: z, g.nodes[i])
        assert o[0] == pytest.approx(lap[i], abs=1e-5)
        assert o[2] == pytest.approx(h2.values[i], abs=1e-5)
        assert s2.values[i] == pytest.approx(sphere.fd_oracle_contraction(lambda z: z, g.nodes[i], 1.0), abs=1e-5)


def test_sigma_tilde_contraction_with_slope():
    g = ZetaGrid(2, 201)
    f = lambda z: 0.3 * np.sin(2 * z) + z**2
    u = g.profile(f)
    v = g.profile(lambda z: 1.0 + 0.5 * (1 - z**2))
    _, _, s2 = sphere.hessian_contractions(u, v)
    for i in (30, 77, 120, 170):
        o = sphere.fd_oracle_contraction(f, g.nodes[i], v.values[i])
        assert s2.values[i] == pytest.approx(o, abs=1e-5)


def test_hessian_contractions_properties():
    g = ZetaGrid(3, 201)
    for f in PROFILES:
        u = g.profile(f)
        hgg, h2, s2 = sphere.hessian_contractions(u)
        gr = sphere.gradient_sq_sigma(u).values
        assert np.all(h2.values >= 2 * gr - 1e-12)
        assert np.all(s2.values >= -1e-10)
    zero = sphere.hessian_contractions(g.profile(1.0))
    assert all(np.max(np.abs(p.values)) < 1e-12 for p in zero)
    with pytest.raises(ValueError, match="v < 1"):
        sphere.hessian_contractions(g.profile(np.sin), g.profile(0.5))


def test_frame_hessian_round_consistency():
    g = ZetaGrid(3, 101)
    u = g.profile(np.exp)
    Hm = sphere.frame_hessian(u, 1.0)
    lap = sphere.laplacian_sigma(u).values
    _, h2, _ = sphere.hessian_contractions(u)
    np.testing.assert_allclose(np.trace(Hm, axis1=1, axis2=2), lap, atol=1e-9)
    np.testing.assert_allclose(np.einsum("nij,nij->n", Hm, Hm), h2.values, rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("mu", [1.0, 2.0, math.cosh(1) ** 2, math.cosh(3) ** 2, math.cosh(5) ** 2])
@pytest.mark.parametrize("n", [2, 3])
def test_berger_identities(mu, n):
    g = ZetaGrid(n, 201)
    for f in PROFILES:
        r1, r2 = sphere.berger_identities_residual(g.profile(f), mu)
        assert r1 <= 1e-8 and r2 <= 1e-8
    assert max(sphere.berger_identities_residual(g.profile(1.0), mu)) <= 1e-12
    if mu == 1.0:
        assert max(sphere.berger_identities_residual(g.profile(np.exp), 1.0)) <= 1e-10


def test_berger_rejects_small_mu():
    with pytest.raises(ValueError):
        sphere.berger_identities_residual(ZetaGrid(2, 33).profile(np.exp), 0.5)


def test_integrals():
    g2, g3 = ZetaGrid(2, 201), ZetaGrid(3, 201)
    assert sphere.integrate_sphere(g2.profile(1.0)) == pytest.approx(2 * math.pi**2, abs=1e-10)
    assert sphere.integrate_sphere(g3.profile(1.0)) == pytest.approx(math.pi**3, abs=1e-10)
    assert abs(sphere.integrate_sphere(g2.profile(lambda z: z))) < 1e-12


def test_density_monte_carlo():
    rng = np.random.default_rng(7)
    for n in (2, 3):
        x = rng.normal(size=(400000, 2 * n))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        z = 1 - 2 * (x[:, 0] ** 2 + x[:, 1] ** 2)
        hist, edges = np.histogram(z, bins=10, range=(-1, 1), density=True)
        mid = 0.5 * (edges[1:] + edges[:-1])
        predicted = ((1 + mid) / 2) ** (n - 2) * sphere.sphere_volume_constant(n) / sphere.sphere_volume(n)
        # the histogram of a linear density is exact at bin centres
        np.testing.assert_allclose(hist, predicted, atol=0.02)
    # the alternative density sqrt(1 - zeta^2) is clearly rejected for n = 2
    alt = np.sqrt(1 - mid**2) * 2 / math.pi
    x = rng.normal(size=(400000, 4))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    hist, _ = np.histogram(1 - 2 * (x[:, 0] ** 2 + x[:, 1] ** 2), bins=10, range=(-1, 1), density=True)
    assert np.max(np.abs(hist - alt)) > 0.2


@pytest.mark.parametrize("n,N", [(2, 801), (3, 1601)])
def test_divergence_theorem(n, N):
    g = ZetaGrid(n, N)
    for f in PROFILES:
        assert abs(sphere.integrate_sphere(sphere.laplacian_sigma(g.profile(f)))) <= 1e-8


def test_divergence_theorem_converges_at_fourth_order():
    vals = [abs(sphere.integrate_sphere(sphere.laplacian_sigma(ZetaGrid(3, N).profile(lambda z: np.sin(3 * z)))))
            for N in (201, 401)]
    assert vals[0] / vals[1] > 10


@pytest.mark.parametrize("n", [2, 3, 4])
def test_endpoint_regularity(n):
    g = ZetaGrid(n, 201)
    for f in PROFILES:
        u = g.profile(f)
        lap = sphere.laplacian_sigma(u).values
        d1, _ = sphere.differentiate(u)
        assert np.all(np.isfinite(lap))
        assert lap[-1] == pytest.approx((4 * (n - 2) - 4 * n) * d1.values[-1], abs=1e-10)
        assert lap[0] == pytest.approx((8 * n - 8) * d1.values[0], abs=1e-10)


def test_oracle_refinement():
    # coarse grids, so that the stencil error dominates the oracle's own error
    f = lambda z: np.sin(3 * z)
    oracle = sphere.fd_oracle(f, 0.5)
    errs = []
    for N in (17, 33):
        g = ZetaGrid(2, N)
        i = int(np.flatnonzero(g.nodes == 0.5)[0])
        u = g.profile(f)
        _, h2, _ = sphere.hessian_contractions(u)
        closed = (sphere.laplacian_sigma(u).values[i], sphere.gradient_sq_sigma(u).values[i], h2.values[i])
        errs.append(max(abs(a - b) for a, b in zip(closed, oracle)))
    assert errs[0] >= 2 * errs[1]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=5), st.integers(2, 4))
def test_polynomial_operators_self_adjoint(coeffs, n):
    # int u Lap w = int w Lap u for polynomials, Simpson + stencils exact enough
    g = ZetaGrid(n, 201)
    u = g.profile(lambda z: sum(c * z ** (m + 1) for m, c in enumerate(coeffs)))
    w = g.profile(lambda z: np.cos(z))
    a = sphere.integrate_sphere(u.with_values(u.values * sphere.laplacian_sigma(w).values))
    b = sphere.integrate_sphere(u.with_values(w.values * sphere.laplacian_sigma(u).values))
    assert a == pytest.approx(b, rel=1e-5, abs=1e-8)


@pytest.mark.parametrize("k", [0.5, 1.0, 2.0])
def test_exponential_identity_direct_operators(k):
    # operators applied to e^{-k zeta} itself; gap relative to max |rhs|
    from imcf_chn.limit import fk_identity_sides
    lhs, rhs = fk_identity_sides(k, ZetaGrid(2, 201), method="literal")
    assert np.max(np.abs(lhs - rhs)) <= 1e-8 * np.max(np.abs(rhs))
