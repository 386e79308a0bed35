import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from imcf_chn import ambient, flow
from imcf_chn.hypersurface import geometry
from imcf_chn.sphere import ZetaGrid, sphere_volume


def test_rhs_on_spheres(grid2):
    for r0 in (0.5, 2.0, 10.0):
        speed = flow.rhs(grid2.profile(r0))
        np.testing.assert_allclose(speed.values, 1 / ambient.hat_H(r0, 2), rtol=1e-10)
    far = flow.rhs(grid2.profile(25.0)).values
    np.testing.assert_allclose(far, 1 / 4, rtol=1e-12)
    assert np.all(flow.rhs(grid2.profile(lambda z: 3 + 0.4 * z)).values > 0)


def test_rhs_accepts_state(grid2):
    prof = grid2.profile(lambda z: 3 + 0.4 * z)
    a = flow.rhs(prof).values
    b = flow.rhs(flow.FlowState(1.0, prof)).values
    np.testing.assert_array_equal(a, b)


def test_mean_convexity_loss_is_reported(grid2):
    bad = grid2.profile(lambda z: 3 + 2 * z**7)
    with pytest.raises(flow.MeanConvexityLost) as info:
        flow.rhs(bad)
    assert info.value.node == 0 and info.value.t == 0.0
    assert str(info.value).startswith("MeanConvexityLost")
    with pytest.raises(flow.MeanConvexityLost):
        flow.run(bad, 1.0)
    with pytest.raises(ValueError):
        flow.rhs(grid2.profile(-1.0))


def test_stepper_config_validation():
    with pytest.raises(ValueError):
        flow.StepperConfig(safety=0)
    with pytest.raises(ValueError):
        flow.StepperConfig(dt_max=-1)
    with pytest.raises(ValueError):
        flow.StepperConfig(output_every=0)


def test_single_step_matches_ode(grid2):
    cfg = flow.StepperConfig()
    s0 = flow.FlowState(0.0, grid2.profile(2.0))
    s1 = flow.step(s0, cfg, dt=0.01)
    exact = flow.sphere_ode_solution(2.0, 0.01, 2)
    np.testing.assert_allclose(s1.rho.values, exact, atol=1e-12)
    assert s1.step_count == 1 and s1.t == pytest.approx(0.01)


def test_stable_dt_grows_as_flow_rounds(grid2):
    cfg = flow.StepperConfig(dt_max=10.0)
    dts = [flow.stable_dt(grid2.profile(r), cfg) for r in (1.0, 3.0, 6.0)]
    assert dts[0] < dts[1] < dts[2]
    assert flow.stable_dt(grid2.profile(30.0), flow.StepperConfig()) == 0.02


def test_nan_injection_triggers_halving_then_failure(grid2):
    cfg = flow.StepperConfig(max_halvings=4)
    s0 = flow.FlowState(0.0, grid2.profile(3.0))
    calls = []

    def poisoned(r, grid, t):
        calls.append(1)
        return np.full_like(r, np.nan)

    with pytest.raises(flow.StepFailed) as info:
        flow.step(s0, cfg, dt=0.01, velocity=poisoned)
    assert len(calls) == 4 * 5
    assert info.value.dt == pytest.approx(0.01 / 2**5)

    # fails only for large steps: recovers after halving
    def flaky(r, grid, t):
        return flow._speed(r, grid, t) if len(calls) > 8 else np.full_like(r, np.nan)

    calls.clear()

    def counted(r, grid, t):
        calls.append(1)
        return flaky(r, grid, t)

    s1 = flow.step(s0, cfg, dt=0.01, velocity=counted)
    assert s1.dt < 0.01


def test_run_lands_on_times(grid2):
    res = flow.run(grid2.profile(2.0), 3.0, record_times=[0.25, 1.5])
    assert sorted(res.snapshots) == [0.0, 1.0, 2.0, 3.0]
    assert sorted(res.recorded) == [0.25, 1.5]
    assert res.final.t == 3.0
    t = res.series.column("t")
    assert t[0] == 0 and t[-1] == 3.0 and np.all(np.diff(t) > 0)
    assert res.series.data.shape[1] == len(flow.SERIES_COLUMNS)
    np.testing.assert_allclose(res.final.rho.values, flow.sphere_ode_solution(2.0, 3.0, 2), atol=1e-10)
    with pytest.raises(ValueError):
        flow.run(grid2.profile(2.0), 0.0)


def test_series_header():
    assert ",".join(flow.SERIES_COLUMNS) == (
        "t,dt,area,log_area_residual,rho_min,rho_max,H_min,H_max,v_max,sup_grad_phi2,"
        "sup_hess_phi2,sup_third_rho,Q,dev_full_max,dev_horiz_max,theta_factor_mid,f_osc")


def test_geometric_times():
    assert flow.geometric_times(15) == [1, 2, 4, 8]
    assert flow.geometric_times(0.5) == []


def test_generic_run_monitors(generic_run):
    s = generic_run.series
    assert np.max(np.abs(s.column("log_area_residual"))) <= 1e-4
    assert np.min(s.column("H_min")) > 0
    v = s.column("v_max")
    assert np.max(v) <= v[0] + 1e-6
    t3, third = s.window("sup_third_rho", 7, 15)
    assert np.max(third) <= 1.2 * third[0]
    t, y = s.window("sup_grad_phi2", 7, 15)
    assert flow.fit_decay_rate(t, y) == pytest.approx(-0.5, abs=0.1)


def test_snapshot_table(generic_run):
    cols, data = flow.snapshot_table(generic_run.final)
    assert cols[0] == "zeta" and data.shape == (201, len(cols))
    assert np.all(np.isfinite(data))


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("r0", [1.0, 2.0, 4.0])
def test_sphere_ode_solution_implicit_relation(n, r0):
    for t in (0.0, 0.5, 3.0, 10.0):
        r = flow.sphere_ode_solution(r0, t, n)
        lhs = (2 * n - 1) * ambient.log_sinh(r) + ambient.log_cosh(r)
        rhs = (2 * n - 1) * ambient.log_sinh(r0) + ambient.log_cosh(r0) + t
        assert lhs == pytest.approx(rhs, abs=1e-13)
    ts, rs = flow.sphere_ode_rk4(r0, 10.0, n, dt=0.02)
    exact = np.array([flow.sphere_ode_solution(r0, t, n) for t in ts])
    assert np.max(np.abs(rs - exact)) <= 1e-6


def test_sphere_ode_large_time_asymptote():
    # rho ~ t/(2n) + const: the speed tends to 1/(2n)
    a, b = flow.sphere_ode_solution(1.0, 100, 2), flow.sphere_ode_solution(1.0, 101, 2)
    assert b - a == pytest.approx(0.25, rel=1e-12)
    with pytest.raises(ValueError):
        flow.sphere_ode_solution(-1.0, 1.0, 2)


def test_sphere_comparison():
    t = np.linspace(0, 30, 61)
    delta, c = flow.sphere_comparison(1.0, 1.0, t)
    assert np.all(delta == 0) and c == 1.0
    delta, c = flow.sphere_comparison(1.0, 1.5, t)
    assert np.all(delta > 0) and 1.0 <= c < 3.0
    _, c60 = flow.sphere_comparison(1.0, 1.5, np.linspace(0, 60, 121))
    assert c60 == pytest.approx(c, rel=1e-6)
    with pytest.raises(ValueError):
        flow.sphere_comparison(1.5, 1.0, t)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 40.0), st.integers(2, 4))
def test_rho_tilde_roundtrip(r, n):
    area = sphere_volume(n) * math.sinh(r) ** (2 * n - 1) * math.cosh(r)
    assert flow.rho_tilde(area, n) == pytest.approx(r, rel=1e-12)


def test_rho_tilde_errors():
    with pytest.raises(ValueError):
        flow.rho_tilde(0.0, 2)


def test_limit_profile(grid2):
    np.testing.assert_allclose(flow.limit_profile(grid2.profile(3.0)).values, 0, atol=1e-12)
    f = flow.limit_profile(grid2.profile(lambda z: 6 + 0.5 * z)).values
    assert f.max() - f.min() == pytest.approx(1.0, rel=1e-12)


def test_fit_decay_rate():
    t = np.linspace(0, 10, 21)
    assert flow.fit_decay_rate(t, 3 * np.exp(-0.7 * t)) == pytest.approx(-0.7, rel=1e-12)
    assert flow.fit_decay_rate(t, np.exp(-t), window=(5, 10)) == pytest.approx(-1, rel=1e-12)
    with pytest.raises(ValueError):
        flow.fit_decay_rate(t[:4], np.exp(-t[:4]))
    with pytest.raises(ValueError):
        flow.fit_decay_rate(t, np.zeros_like(t))


def test_q_evolution_check_on_spheres(grid2):
    ts = np.linspace(0, 2, 9)
    profs = [grid2.profile(flow.sphere_ode_solution(2.0, t, 2)) for t in ts]
    rep = flow.q_evolution_check(ts, profs, t_min=0.0)
    assert np.max(np.abs(rep["Q"])) < 1e-10
    assert np.max(rep["negative_part"]) < 1e-9
    with pytest.raises(ValueError):
        flow.q_evolution_check(ts[:3], profs[:3])


def test_q_evolution_generic(q_run):
    times = sorted(q_run.recorded)
    rep = flow.q_evolution_check(times, [q_run.recorded[t] for t in times])
    assert rep["mismatch_normal_form"] <= 0.01
    assert rep["mismatch_v_over_H_form"] > 0.1
    assert np.all(rep["dQdt"][np.asarray(times) >= 2] < 0)
    assert rep["negative_rate"] <= -0.4


def test_q_terms_components(grid2):
    prof = grid2.profile(lambda z: 2 + 0.5 * z)
    terms = flow.q_terms(prof)
    g = geometry(prof)
    assert terms["Q"] == pytest.approx(g.Q, rel=1e-12)
    assert terms["area"] == pytest.approx(g.area, rel=1e-14)
    # curvature term against the direct |A|^2 - 2(n+1)
    w = grid2.quadrature_weights
    direct = g.area ** (-0.5) * w @ ((g.A2 - 6) / g.H * g.area_density)
    assert terms["curvature"] == pytest.approx(direct, rel=1e-8)
