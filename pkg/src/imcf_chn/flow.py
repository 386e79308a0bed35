"""Inverse mean curvature flow of radial graphs by the method of lines.

The radial function obeys ``d rho / dt = v / H`` at fixed ``zeta``.  Time
stepping is classical RK4 with a parabolic step bound taken from the
linearized diffusion coefficient, which decays like ``exp(-t/n)`` so the
steps lengthen as the flow becomes round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from . import ambient
from .hypersurface import geometry
from .sphere import AxiProfile, grad2_kernel, hessian_kernels, lap_kernel, sphere_volume

SERIES_COLUMNS = (
    "t", "dt", "area", "log_area_residual", "rho_min", "rho_max", "H_min", "H_max",
    "v_max", "sup_grad_phi2", "sup_hess_phi2", "sup_third_rho", "Q", "dev_full_max",
    "dev_horiz_max", "theta_factor_mid", "f_osc",
)


class MeanConvexityLost(RuntimeError):
    def __init__(self, node: int, t: float, H: float):
        super().__init__(f"MeanConvexityLost: H = {H:.6g} <= 0 at node {node}, t = {t:.6g}")
        self.node, self.t, self.H = node, t, H


class StepFailed(RuntimeError):
    def __init__(self, t: float, dt: float, reason: str):
        super().__init__(f"StepFailed at t = {t:.6g} after halving dt to {dt:.3g}: {reason}")
        self.t, self.dt = t, dt


@dataclass(frozen=True)
class FlowState:
    t: float
    rho: AxiProfile
    dt: float = 0.0
    step_count: int = 0


@dataclass(frozen=True)
class StepperConfig:
    safety: float = 0.4
    dt_max: float = 0.02
    abort_on: tuple = ("mean-convexity-loss", "nan")
    output_every: int = 1
    max_halvings: int = 10

    def __post_init__(self):
        if not 0.0 < self.safety <= 1.0:
            raise ValueError(f"safety must lie in (0, 1], got {self.safety}")
        if not self.dt_max > 0:
            raise ValueError(f"dt_max must be positive, got {self.dt_max}")
        if self.output_every < 1:
            raise ValueError("output_every must be >= 1")


@dataclass
class DiagnosticsSeries:
    """Monitor rows, one per recorded time, in the column order of
    :data:`SERIES_COLUMNS`.  ``H_dev_sup`` holds ``max |H - 2n|`` per row."""

    rows: list = field(default_factory=list)
    H_dev_sup: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        if name == "H_dev_sup":
            return np.asarray(self.H_dev_sup)
        j = SERIES_COLUMNS.index(name)
        return np.array([r[j] for r in self.rows])

    @property
    def data(self) -> np.ndarray:
        return np.array(self.rows, dtype=float).reshape(-1, len(SERIES_COLUMNS))

    def window(self, name: str, t0: float, t1: float):
        t = self.column("t")
        m = (t >= t0 - 1e-12) & (t <= t1 + 1e-12)
        return t[m], self.column(name)[m]


@dataclass
class RunResult:
    series: DiagnosticsSeries
    snapshots: dict           # time -> AxiProfile of rho
    final: FlowState
    recorded: dict = field(default_factory=dict)   # time -> AxiProfile at record_times


# ---------------------------------------------------------------------------
# right-hand side


def _velocity_fields(r: np.ndarray, grid) -> tuple[np.ndarray, np.ndarray]:
    """``(H, v)`` for the radial values ``r`` on ``grid``; the lean path used
    inside the stepper."""
    z, n = grid.nodes, grid.n
    d1 = grid.d1_matrix @ r
    d2 = grid.d2_matrix @ r
    s, c = np.sinh(r), np.cosh(r)
    p1 = d1 / s
    p2 = d2 / s - c * d1**2 / s**2
    grad2 = grad2_kernel(z, p1)
    v = np.sqrt(1.0 + grad2)
    ueta2 = grad2
    uetaeta = 4.0 * (1.0 - z**2) * p2 - 4.0 * z * p1
    trace = lap_kernel(z, n, p1, p2) - ueta2 * uetaeta / v**2
    H = (-trace / s + ambient.hat_H(r, n)) / v
    return H, v


def rhs(state: FlowState | AxiProfile) -> AxiProfile:
    """Normal speed ``v / H`` nodewise."""
    rho = state.rho if isinstance(state, FlowState) else state
    t = state.t if isinstance(state, FlowState) else 0.0
    r = rho.values
    if np.any(r <= 0):
        raise ValueError(f"radial function must be positive (node {int(np.argmin(r))})")
    H, v = _velocity_fields(r, rho.grid)
    _check_convex(H, t)
    return rho.with_values(v / H)


def _check_convex(H: np.ndarray, t: float):
    bad = ~(H > 0)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise MeanConvexityLost(i, t, float(H[i]))


def diffusion_scale(rho: AxiProfile) -> float:
    """``max 4(1-zeta^2) / (H^2 v sinh^2 rho)``, the explicit stability scale."""
    r = rho.values
    H, v = _velocity_fields(r, rho.grid)
    return float(np.max(4.0 * (1.0 - rho.zeta**2) / (H**2 * v * np.sinh(r) ** 2)))


def stable_dt(rho: AxiProfile, cfg: StepperConfig) -> float:
    D = diffusion_scale(rho)
    h = rho.grid.h
    return min(cfg.dt_max, cfg.safety * h * h / D) if D > 0 else cfg.dt_max


def _rk4(r: np.ndarray, grid, t: float, dt: float, velocity: Callable) -> np.ndarray:
    k1 = velocity(r, grid, t)
    k2 = velocity(r + 0.5 * dt * k1, grid, t + 0.5 * dt)
    k3 = velocity(r + 0.5 * dt * k2, grid, t + 0.5 * dt)
    k4 = velocity(r + dt * k3, grid, t + dt)
    return r + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _speed(r, grid, t):
    H, v = _velocity_fields(r, grid)
    return v / H


def step(state: FlowState, cfg: StepperConfig, dt: float | None = None,
         velocity: Callable | None = None) -> FlowState:
    """One RK4 step.  ``dt`` defaults to the stable step; it is halved and the
    step retried when the result is non-finite or loses mean convexity."""
    velocity = velocity or _speed
    grid = state.rho.grid
    r = state.rho.values
    H0, _ = _velocity_fields(r, grid)
    _check_convex(H0, state.t)
    if dt is None:
        dt = stable_dt(state.rho, cfg)
    reason = ""
    for _ in range(cfg.max_halvings + 1):
        with np.errstate(all="ignore"):
            try:
                new = _rk4(r, grid, state.t, dt, velocity)
                ok = np.all(np.isfinite(new)) and np.all(new > 0)
                if ok:
                    H1, _ = _velocity_fields(new, grid)
                    ok = bool(np.all(H1 > 0))
                    reason = "mean convexity lost in trial step"
                else:
                    reason = "non-finite values"
            except (FloatingPointError, ValueError) as exc:
                ok, reason = False, str(exc)
        if ok:
            return FlowState(state.t + dt, state.rho.with_values(new), dt, state.step_count + 1)
        dt *= 0.5
    raise StepFailed(state.t, dt, reason)


# ---------------------------------------------------------------------------
# monitors


def diagnostics_row(state: FlowState, log_area0: float):
    g = geometry(state.rho)
    rho = state.rho
    grid = rho.grid
    third = grid.d1_matrix @ (grid.d2_matrix @ rho.values)
    f = limit_profile(state, area=g.area)
    row = (
        state.t, state.dt, g.area, math.log(g.area) - log_area0 - state.t,
        float(rho.values.min()), float(rho.values.max()), float(g.H.min()), float(g.H.max()),
        float(g.v.max()), float(g.grad_phi2.max()), float(g.hess_phi2.max()),
        float(np.max(np.abs(third))), g.Q, float(g.dev_full.max()), float(g.dev_horiz.max()),
        float(g.theta_factor[grid.N // 2]), float(f.values.max() - f.values.min()),
    )
    return row, float(np.max(np.abs(g.H_minus_2n)))


def snapshot_table(state: FlowState) -> tuple[tuple, np.ndarray]:
    """Columns and data of a snapshot CSV."""
    g = geometry(state.rho)
    f = limit_profile(state, area=g.area)
    cols = ("zeta", "rho", "v", "H", "hatH", "A2", "dev_full", "dev_horiz", "theta_factor", "f_t")
    data = np.column_stack([state.rho.zeta, state.rho.values, g.v, g.H, g.hatH, g.A2,
                            g.dev_full, g.dev_horiz, g.theta_factor, f.values])
    return cols, data


def geometric_times(t_end: float) -> list[float]:
    out, t = [], 1.0
    while t <= t_end + 1e-12:
        out.append(t)
        t *= 2.0
    return out


def run(rho0: AxiProfile, t_end: float, cfg: StepperConfig | None = None,
        snapshot_times: Iterable[float] | None = None,
        record_times: Iterable[float] = (),
        progress: Callable[[FlowState], None] | None = None) -> RunResult:
    """Integrate the flow from ``rho0`` up to ``t_end``.

    The stepper lands exactly on every snapshot and record time.  Snapshot
    profiles default to the times ``1, 2, 4, ...`` and are always taken at
    ``t = 0`` and ``t_end``; ``record_times`` keeps additional profiles.
    """
    cfg = cfg or StepperConfig()
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    snaps = sorted(set(geometric_times(t_end) if snapshot_times is None else snapshot_times))
    recs = sorted(set(float(t) for t in record_times))
    landings = sorted(set([t for t in snaps + recs if 0 < t < t_end] + [t_end]))
    state = FlowState(0.0, rho0, 0.0, 0)
    H0, _ = _velocity_fields(rho0.values, rho0.grid)
    _check_convex(H0, 0.0)
    series = DiagnosticsSeries()
    log_area0 = math.log(geometry(rho0).area)
    row, hdev = diagnostics_row(state, log_area0)
    series.rows.append(row)
    series.H_dev_sup.append(hdev)
    snapshots = {0.0: rho0}
    recorded = {0.0: rho0} if 0.0 in recs else {}
    li = 0
    while li < len(landings):
        target = landings[li]
        dt = stable_dt(state.rho, cfg)
        landing = state.t + dt >= target - 1e-12 * max(1.0, target)
        if landing:
            dt = target - state.t
        state = step(state, cfg, dt=dt)
        if landing and state.t != target:
            state = replace(state, t=target)
        if landing or state.step_count % cfg.output_every == 0:
            row, hdev = diagnostics_row(state, log_area0)
            series.rows.append(row)
            series.H_dev_sup.append(hdev)
        if landing:
            if any(abs(target - s) < 1e-12 for s in snaps) or target == t_end:
                snapshots[target] = state.rho
            if any(abs(target - s) < 1e-12 for s in recs):
                recorded[target] = state.rho
            li += 1
        if progress is not None:
            progress(state)
    return RunResult(series, snapshots, state, recorded)


# ---------------------------------------------------------------------------
# geodesic spheres


def _log_area_profile(r, n):
    """``log(sinh^{2n-1} r cosh r)``."""
    return (2 * n - 1) * ambient.log_sinh(r) + ambient.log_cosh(r)


def _solve_increasing(F: Callable, dF: Callable, target: float, lo: float, hi: float,
                      tol: float = 1e-13, maxiter: int = 200) -> float:
    """Root of an increasing function on a bracket by Newton with bisection fallback."""
    flo, fhi = F(lo) - target, F(hi) - target
    if flo > 0 or fhi < 0:
        raise ValueError("root not bracketed")
    x = 0.5 * (lo + hi)
    for _ in range(maxiter):
        fx = F(x) - target
        if abs(fx) <= tol * max(1.0, abs(target)):
            return x
        if fx > 0:
            hi = x
        else:
            lo = x
        d = dF(x)
        xn = x - fx / d if d > 0 else lo - 1.0
        if not lo < xn < hi:
            xn = 0.5 * (lo + hi)
        if xn == x:
            return x
        x = xn
    return x


def _dlog_area_profile(r, n):
    return (2 * n - 1) / math.tanh(r) + math.tanh(r)


def sphere_ode_solution(rho0: float, t: float, n: int) -> float:
    """Radius at time ``t`` of the geodesic sphere that had radius ``rho0``.

    Solves ``cosh(rho) sinh^{2n-1}(rho) = cosh(rho0) sinh^{2n-1}(rho0) e^t``.
    """
    if not rho0 > 0 or t < 0:
        raise ValueError("need rho0 > 0 and t >= 0")
    if t == 0:
        return float(rho0)
    target = float(_log_area_profile(rho0, n)) + t
    return _solve_increasing(lambda r: float(_log_area_profile(r, n)),
                             lambda r: _dlog_area_profile(r, n),
                             target, rho0, rho0 + t / (2 * n - 1))


def sphere_ode_rk4(rho0: float, t_end: float, n: int, dt: float = 0.01):
    """RK4 solution of ``rho' = 1 / hatH(rho)``; returns ``(t, rho)`` arrays."""
    steps = max(1, int(math.ceil(t_end / dt - 1e-9)))
    h = t_end / steps

    def f(r):
        return 1.0 / ambient.hat_H(r, n)

    ts = np.linspace(0.0, t_end, steps + 1)
    rs = np.empty(steps + 1)
    rs[0] = r = float(rho0)
    for i in range(steps):
        k1 = f(r)
        k2 = f(r + 0.5 * h * k1)
        k3 = f(r + 0.5 * h * k2)
        k4 = f(r + h * k3)
        r = r + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        rs[i + 1] = r
    return ts, rs


def sphere_comparison(rho1_0: float, rho2_0: float, t_grid: Sequence[float], n: int = 2):
    """Gap ``rho2(t) - rho1(t)`` between two concentric geodesic spheres.

    Returns ``(delta, c)`` with ``c = sup delta / delta(0)`` (``c = 1`` when the
    spheres coincide).
    """
    if not 0 < rho1_0 <= rho2_0:
        raise ValueError("need 0 < rho1_0 <= rho2_0")
    ts = np.asarray(t_grid, dtype=float)
    delta = np.array([sphere_ode_solution(rho2_0, t, n) - sphere_ode_solution(rho1_0, t, n)
                      for t in ts])
    d0 = rho2_0 - rho1_0
    c = float(np.max(delta) / d0) if d0 > 0 else 1.0
    return delta, c


def rho_tilde(area: float, n: int) -> float:
    """Radius of the geodesic sphere with the given area."""
    if not area > 0:
        raise ValueError("area must be positive")
    target = math.log(area) - math.log(sphere_volume(n))
    F = lambda r: float(_log_area_profile(r, n))
    lo, hi = 1.0, 1.0
    while F(lo) > target:
        lo *= 0.5
    while F(hi) < target:
        hi *= 2.0
    return _solve_increasing(F, lambda r: _dlog_area_profile(r, n), target, lo, hi, tol=1e-15)


def limit_profile(state: FlowState | AxiProfile, area: float | None = None) -> AxiProfile:
    """``f_t = rho - rho_tilde(|M_t|)``, the gap to the equal-area geodesic sphere."""
    rho = state.rho if isinstance(state, FlowState) else state
    if area is None:
        area = geometry(rho).area
    return rho.with_values(rho.values - rho_tilde(area, rho.grid.n))


# ---------------------------------------------------------------------------
# rate fitting and Q dynamics


def fit_decay_rate(t, y, window: tuple[float, float] | None = None) -> float:
    """Least-squares slope of ``log y`` against ``t`` on ``window``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is not None:
        m = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
        t, y = t[m], y[m]
    if t.size < 5:
        raise ValueError(f"need at least 5 samples in the fit window, got {t.size}")
    if np.any(~(y > 0)):
        raise ValueError("decay fit needs strictly positive samples")
    slope, _ = np.polyfit(t, np.log(y), 1)
    return float(slope)


def q_terms(rho: AxiProfile) -> dict:
    """Pieces of the evolution of ``Q`` at one time.

    Returns ``Q``, the Hopf-curvature term with weight ``v/H``
    (``v_over_H_form``) and with weight ``1/(vH)`` (``normal_form``), and the
    curvature term ``|M|^{-1+1/n} int (|A|^2 - 2(n+1)) / H``.
    """
    from .hypersurface import _fields

    f = _fields(rho)
    n = rho.grid.n
    r = rho.values
    w = rho.grid.quadrature_weights
    dmu = f["area_density"]
    area = float(w @ dmu)
    scale = area ** (-1.0 + 1.0 / n)
    v, H = f["v"], f["H"]
    s, c = np.sinh(r), np.cosh(r)
    hopf = (2 * n - 1) / s**2 - 1.0 / c**2
    # |A|^2 - 2(n+1) without cancellation
    alpha = ambient.coth_m1(r) / v - f["grad_phi2"] / (v * (1.0 + v))
    beta = ambient.tanh_m1(r) / v - f["grad_phi2"] / (v * (1.0 + v))
    p1 = rho.grid.d1_matrix @ r / s
    p2 = rho.grid.d2_matrix @ r / s - c * (rho.grid.d1_matrix @ r) ** 2 / s**2
    _, _, s2 = hessian_kernels(rho.zeta, n, p1, p2, v)
    grad2 = f["grad_phi2"]
    A2m = ((s2 + 2.0 * s**2 * grad2) / (v**2 * s**2) + 2.0 * (1.0 + alpha) * f["H_vs"]
           + (2 * n - 1) * (2.0 * alpha + alpha**2) + 2.0 * beta + beta**2 - 2.0 * grad2 / v**2)
    Q = scale * float(w @ (f["H_minus_hatH"] * dmu))
    return dict(
        Q=Q, area=area,
        v_over_H_form=scale * float(w @ (hopf * v / H * dmu)),
        normal_form=scale * float(w @ (hopf / (v * H) * dmu)),
        curvature=scale * float(w @ (A2m / H * dmu)),
    )


def q_evolution_check(times: Sequence[float], profiles: Sequence[AxiProfile],
                      t_min: float = 2.0) -> dict:
    """Compare a centred difference of ``Q(t)`` with the evolution identity.

    ``times`` must be uniformly spaced.  Mismatches are reported relative to
    ``max |dQ/dt|`` over ``t >= t_min`` for both weightings of the Hopf term.
    The negative part of ``dQ/dt`` is fitted with an exponential.
    """
    times = np.asarray(times, dtype=float)
    if times.size < 5:
        raise ValueError("q_evolution_check needs at least 5 samples")
    terms = [q_terms(p) for p in profiles]
    n = profiles[0].grid.n
    Q = np.array([tm["Q"] for tm in terms])
    dQ = np.gradient(Q, times, edge_order=2)
    out = {"t": times, "Q": Q, "dQdt": dQ}
    for key in ("v_over_H_form", "normal_form"):
        pred = np.array([tm["Q"] / n + tm[key] - tm["curvature"] for tm in terms])
        out[f"rhs_{key}"] = pred
    m = times >= t_min
    scale = float(np.max(np.abs(dQ[m]))) if np.any(m) else 0.0
    for key in ("v_over_H_form", "normal_form"):
        err = np.abs(dQ[m] - out[f"rhs_{key}"][m])
        out[f"mismatch_{key}"] = float(np.max(err) / scale) if scale > 0 else float(np.max(err))
    neg = np.maximum(0.0, -dQ)
    out["negative_part"] = neg
    mm = m & (neg > 0)
    if np.count_nonzero(mm) >= 5:
        out["negative_rate"] = fit_decay_rate(times[mm], neg[mm])
        out["negative_const"] = float(np.max(neg[mm] * np.exp(-out["negative_rate"] * times[mm])))
    else:
        out["negative_rate"] = None
        out["negative_const"] = 0.0
    return out
