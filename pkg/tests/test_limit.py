import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from imcf_chn import bessel, limit
from imcf_chn.sphere import ZetaGrid, sphere_volume


@pytest.fixture(scope="module")
def g2():
    return ZetaGrid(2, 201)


def test_lq_constant_vanishes(g2):
    for c in (0.0, 0.7, -2.0):
        assert abs(limit.lq_functional(g2.profile(c))) <= 1e-10


def test_lq_linear_positive_and_quadrature_oracle(g2):
    J = limit.lq_functional(limit.ConformalFactor(g2.profile(lambda z: 3 * z)))
    assert J > 0
    # constant density on S^3: J = |S^3|^{1/2} * 4k B / sqrt(A) with shifted exponentials
    k = 3.0
    A, _ = integrate.quad(lambda z: np.exp(4 * k * (z - 1)), -1, 1, epsrel=1e-13)
    B, _ = integrate.quad(lambda z: np.exp(2 * k * (z - 1)) * (k * z * z + 2 * z - k), -1, 1, epsrel=1e-13)
    vol = sphere_volume(2) / 2  # Lebesgue measure in zeta: |S^3| dzeta / 2
    oracle = (vol * A) ** -0.5 * vol * 4 * k * B
    assert J == pytest.approx(oracle, rel=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-1.0, 1.0), st.floats(-0.5, 0.5), st.integers(2, 3))
def test_lq_shift_invariance(shift, a, b, n):
    g = ZetaGrid(n, 101)
    f = lambda z: a * z + b * z**2
    J0 = limit.lq_functional(g.profile(f))
    J1 = limit.lq_functional(g.profile(lambda z: f(z) + shift))
    assert abs(J1 - J0) <= 1e-10 * max(1.0, abs(J0))


@pytest.mark.parametrize("n", [2, 3])
def test_lq_by_parts_agrees(n):
    g = ZetaGrid(n, 401)
    for f in (lambda z: 0.5 * z, lambda z: np.sin(2 * z), lambda z: z**2 - 0.3 * z**3):
        a = limit.lq_functional(g.profile(f))
        b = limit.lq_functional_by_parts(g.profile(f))
        assert a == pytest.approx(b, rel=1e-6)
        assert b > 0


def test_webster_residual(g2):
    assert limit.webster_flatness_residual(g2.profile(0.7)) == 0.0
    assert limit.webster_flatness_residual(g2.profile(lambda z: 0.5 * z)) == pytest.approx(1.0)


def test_webster_residual_of_flow_limit(generic_run):
    from imcf_chn.flow import limit_profile
    f = limit_profile(generic_run.final)
    assert limit.webster_flatness_residual(f) > 0.5


@pytest.mark.parametrize("k", [0.5, 1, 2, 4, 8])
def test_fk_identity(g2, k):
    assert limit.fk_identity_residual(k, g2) <= 1e-7


def test_fk_identity_small_k(g2):
    for k in (1e-2, 1e-3):
        lhs, rhs = limit.fk_identity_sides(k, g2)
        assert np.max(np.abs(rhs)) <= 12 * k
        assert np.max(np.abs(lhs - rhs)) <= 1e-9 * k


def test_fk_literal_converges_fourth_order():
    coarse = limit.fk_identity_residual(8, ZetaGrid(2, 201), method="literal")
    fine = limit.fk_identity_residual(8, ZetaGrid(2, 401), method="literal")
    assert coarse / fine >= 4
    assert coarse / fine == pytest.approx(16, rel=0.3)


def test_fk_errors(g2):
    with pytest.raises(ValueError):
        limit.fk_identity_residual(0.0, g2)
    with pytest.raises(ValueError):
        limit.fk_identity_sides(1.0, ZetaGrid(3, 33))
    with pytest.raises(ValueError):
        limit.fk_identity_sides(1.0, g2, method="spectral")


def test_bessel_at_zero():
    assert bessel.bessel_I(0, 0.0) == 1.0
    assert bessel.bessel_I(1, 0.0) == 0.0
    assert bessel.bessel_I_log(0, 0.0) == 0.0


def test_bessel_against_extended_precision_series():
    mpmath.mp.dps = 40
    oracle = mpmath.nsum(lambda m: mpmath.mpf(1) ** 0 / (mpmath.factorial(m) * mpmath.factorial(m + 1)), [0, 60])
    oracle = sum(mpmath.mpf(1) / (mpmath.factorial(m) * mpmath.factorial(m + 1)) for m in range(60))
    assert bessel.bessel_I(1, 2.0) == pytest.approx(float(oracle), rel=1e-12)


@pytest.mark.parametrize("p", [0, 1, 2, 3])
@pytest.mark.parametrize("x", [0.1, 1.0, 7.5, 29.0, 31.0, 60.0, 250.0, 480.0])
def test_bessel_vs_mpmath(p, x):
    mpmath.mp.dps = 30
    ref = float(mpmath.besseli(p, x))
    assert bessel.bessel_I(p, x) == pytest.approx(ref, rel=1e-10)
    assert bessel.bessel_I_scaled(p, x) == pytest.approx(special.ive(p, x), rel=1e-10)


def test_bessel_asymptotic_ratio():
    x = 100.0
    ratio = bessel.bessel_I(1, x) * math.sqrt(2 * math.pi * x) / math.exp(x)
    assert abs(ratio - 1) < 0.01


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.floats(0.5, 20.0))
def test_bessel_recurrence(p, x):
    lhs = bessel.bessel_I(p - 1, x) - bessel.bessel_I(p + 1, x)
    assert lhs == pytest.approx(2 * p / x * bessel.bessel_I(p, x), rel=1e-9)


def test_bessel_overflow_and_log():
    with pytest.raises(OverflowError):
        bessel.bessel_I(1, 800.0)
    mpmath.mp.dps = 30
    assert bessel.bessel_I_log(1, 800.0) == pytest.approx(float(mpmath.log(mpmath.besseli(1, 800))), rel=1e-14)
    assert bessel.bessel_I_log(2, 10.0) == pytest.approx(math.log(bessel.bessel_I(2, 10.0)), rel=1e-14)
    with pytest.raises(ValueError):
        bessel.bessel_I(-1, 1.0)
    with pytest.raises(ValueError):
        bessel.bessel_I(1, -1.0)


def test_qk_study():
    table = limit.qk_study([8, 16, 32, 64])
    e_paper, e_quad_paper, e_derived = table.exponents
    assert e_quad_paper == pytest.approx(0.25, abs=0.05)
    assert e_paper == pytest.approx(e_quad_paper, abs=1e-6)
    r = table.ratio
    assert np.max(r) / np.min(r) - 1 < 0.01
    # derived density: reported, only sanity-checked
    assert 0.3 < e_derived < 0.7


def test_qk_columns_monotone():
    table = limit.qk_study([4, 6, 8, 16, 32, 64, 128])
    for col in (table.paper, table.quad_paper_density, table.quad_derived_density):
        assert np.all(np.diff(col) > 0)


def test_qk_derived_matches_lq(g2):
    k = 3.0
    J = limit.lq_functional(g2.profile(lambda z: k * z))
    assert J == pytest.approx(4 * math.pi * limit.qk_quadrature(k, "derived"), rel=1e-6)


def test_qk_validation():
    for bad in ([], [8, 4], [-1, 2], [2, 2]):
        with pytest.raises(ValueError):
            limit.qk_study(bad)
