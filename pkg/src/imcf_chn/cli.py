"""Command-line front end ``imcf-chn``.

Exit codes: 0 success, 1 failed verification or invalid input, 2 a monitor
outside its tolerance, 3 solver abort (loss of mean convexity or a step that
could not be completed).
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import flow, limit
from .config import COMMANDS, ConfigError, RunConfig, parse_config
from .parallel import worker_count
from .sphere import ZetaGrid

EXIT_OK, EXIT_VERIFY, EXIT_MONITOR, EXIT_ABORT = 0, 1, 2, 3

VOLUME_TOL = 1e-4
STAR_TOL = 1e-6
SPHERE_TOL = 1e-6
Q_IDENTITY_TOL = 0.01
RATE_BAND = 0.2


def fmt(x) -> str:
    return f"{float(x):.17g}"


def write_csv(path: Path, columns, rows, footer=None):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(x) for x in row) + "\n")
        if footer is not None:
            fh.write(",".join([footer[0]] + [fmt(x) for x in footer[1:]]) + "\n")


class Report:
    def __init__(self):
        self.lines: list[str] = []
        self.failed = False

    def add(self, text: str):
        self.lines.append(text)

    def monitor(self, name: str, ok: bool, measured: str):
        self.failed |= not ok
        self.add(f"{'PASS' if ok else 'FAIL'}  {name}: {measured}")

    def flag(self, name: str, ok: bool, measured: str):
        self.add(f"{'ok  ' if ok else 'FLAG'}  {name}: {measured}")

    def write(self, path: Path):
        text = "\n".join(self.lines) + "\n"
        path.write_text(text)
        sys.stdout.write(text)


def _setup(cfg: RunConfig):
    grid = ZetaGrid(cfg.n, cfg.grid_points)
    stepper = flow.StepperConfig(safety=cfg.stepper_safety, dt_max=cfg.stepper_dt_max,
                                 output_every=cfg.output_every)
    return grid, grid.profile(cfg.initial_profile), stepper


def _window(cfg: RunConfig):
    return tuple(cfg.fit_window) if cfg.fit_window else (0.5 * cfg.t_end, cfg.t_end)


def _rate_lines(rep: Report, series, n: int, window):
    targets = {"sup_grad_phi2": -1.0 / n, "H_dev_sup": -1.0 / n,
               "dev_full_max": -1.0 / n, "dev_horiz_max": -2.0 / n, "sup_hess_phi2": -1.0 / n}
    rates = {}
    for name, target in targets.items():
        t, y = series.window(name, *window)
        try:
            rate = flow.fit_decay_rate(t, y)
        except ValueError as exc:
            rep.add(f"n/a   decay rate of {name}: {exc}")
            continue
        rates[name] = rate
        rep.flag(f"decay rate of {name} on [{window[0]:g}, {window[1]:g}]",
                 abs(rate - target) <= RATE_BAND * abs(target),
                 f"{rate:.4f} (bound rate {target:.4f})")
    return rates


def _flow_monitors(rep: Report, series):
    lar = float(np.max(np.abs(series.column("log_area_residual"))))
    rep.monitor("volume law |log|M_t| - log|M_0| - t|", lar <= VOLUME_TOL, f"max {lar:.3e}")
    hmin = float(series.column("H_min").min())
    rep.monitor("mean convexity H_min > 0", hmin > 0, f"min H {hmin:.6g}")
    v = series.column("v_max")
    growth = float(np.max(v) - v[0])
    rep.monitor("star-shapedness v_max(t) <= v_max(0) + 1e-6", growth <= STAR_TOL, f"growth {growth:.3e}")


def _write_series(out: Path, series):
    write_csv(out / "series.csv", flow.SERIES_COLUMNS, series.rows)


def _write_snapshots(out: Path, snapshots):
    for t, rho in sorted(snapshots.items()):
        cols, data = flow.snapshot_table(flow.FlowState(t, rho))
        write_csv(out / f"snapshot_t{t:g}.csv", cols, data)


def cmd_flow(cfg: RunConfig, out: Path, figures: bool = False) -> int:
    grid, rho0, stepper = _setup(cfg)
    res = flow.run(rho0, cfg.t_end, stepper)
    _write_series(out, res.series)
    _write_snapshots(out, res.snapshots)
    rep = Report()
    rep.add(f"flow: n = {cfg.n}, N = {cfg.grid_points}, t_end = {cfg.t_end:g}, steps = {res.final.step_count}")
    _flow_monitors(rep, res.series)
    _rate_lines(rep, res.series, cfg.n, _window(cfg))
    if figures:
        from . import plotting
        plotting.plot_series(res.series, out / "series.png", cfg.n)
        plotting.plot_profiles(grid.nodes, {t: flow.limit_profile(r).values for t, r in res.snapshots.items()},
                               out / "snapshots.png")
    rep.write(out / "summary.txt")
    return EXIT_MONITOR if rep.failed else EXIT_OK


def cmd_sphere(cfg: RunConfig, out: Path, figures: bool = False) -> int:
    rho0 = cfg.initial_tau
    t, rho_num = flow.sphere_ode_rk4(rho0, cfg.t_end, cfg.n, dt=cfg.stepper_dt_max)
    exact = np.array([flow.sphere_ode_solution(rho0, x, cfg.n) for x in t])
    err = np.abs(rho_num - exact)
    write_csv(out / "sphere.csv", ("t", "rho_rk4", "rho_exact", "abs_error"),
              np.column_stack([t, rho_num, exact, err]))
    rep = Report()
    rep.add(f"sphere: n = {cfg.n}, rho0 = {rho0:g}, t_end = {cfg.t_end:g}")
    rep.monitor("RK4 vs implicit solution, final residual", err[-1] <= SPHERE_TOL, f"{err[-1]:.3e}")
    rep.monitor("RK4 vs implicit solution, max residual", err.max() <= SPHERE_TOL, f"{err.max():.3e}")
    grid = ZetaGrid(cfg.n, cfg.grid_points)
    stepper = flow.StepperConfig(safety=cfg.stepper_safety, dt_max=cfg.stepper_dt_max,
                                 output_every=cfg.output_every)
    pde = flow.run(grid.profile(rho0), cfg.t_end, stepper, snapshot_times=[])
    tt = pde.series.column("t")
    ex = np.array([flow.sphere_ode_solution(rho0, x, cfg.n) for x in tt])
    pde_err = float(max(np.max(np.abs(pde.series.column("rho_max") - ex)),
                        np.max(np.abs(pde.series.column("rho_min") - ex))))
    rep.monitor("full PDE with constant datum vs implicit solution", pde_err <= SPHERE_TOL, f"{pde_err:.3e}")
    if figures:
        from . import plotting
        plotting.plot_sphere(t, rho_num, exact, out / "sphere.png")
    rep.write(out / "summary.txt")
    return EXIT_MONITOR if rep.failed else EXIT_OK


def cmd_limit(cfg: RunConfig, out: Path, figures: bool = False) -> int:
    grid, rho0, stepper = _setup(cfg)
    dense = np.round(np.arange(0.0, cfg.t_end + 1e-9, 0.05), 10)
    res = flow.run(rho0, cfg.t_end, stepper, record_times=dense)
    _write_series(out, res.series)
    _write_snapshots(out, res.snapshots)
    rep = Report()
    rep.add(f"limit: n = {cfg.n}, N = {cfg.grid_points}, t_end = {cfg.t_end:g}")
    _flow_monitors(rep, res.series)

    f_final = flow.limit_profile(res.final)
    f0 = flow.limit_profile(rho0)
    write_csv(out / "limit.csv", ("zeta", "f_0", "f_final"), np.column_stack([grid.nodes, f0.values, f_final.values]))
    osc = limit.webster_flatness_residual(f_final)
    osc0 = limit.webster_flatness_residual(f0)
    rep.add(f"limit factor oscillation max f - min f = {osc:.6g} (initial {osc0:.6g}); "
            f"{'non-constant' if osc > 1e-8 else 'constant'} Webster curvature limit")
    J = limit.lq_functional(f_final)
    Qf = res.series.column("Q")[-1]
    rep.add(f"J(f_final) = {fmt(J)}, Q(t_end) = {fmt(Qf)}")

    # Cauchy differences of f_t two time units apart
    times = sorted(res.recorded)
    fs = {t: flow.limit_profile(res.recorded[t]).values for t in times}
    lo, hi = _window(cfg)
    tc = [t for t in times if lo <= t <= hi - 2.0 and abs((t * 2) - round(t * 2)) < 1e-9]
    gaps = [float(np.max(np.abs(fs[round(t + 2.0, 10)] - fs[t]))) for t in tc]
    if len(tc) >= 5 and all(g > 0 for g in gaps):
        rate = flow.fit_decay_rate(tc, gaps)
        rep.flag("decay rate of ||f_{t+2} - f_t||", abs(rate + 1.0 / cfg.n) <= RATE_BAND / cfg.n,
                 f"{rate:.4f} (bound rate {-1.0 / cfg.n:.4f})")
    else:
        rep.add("n/a   decay rate of ||f_{t+2} - f_t||: window too short")

    qt = [t for t in times if t >= 0.0]
    qrep = flow.q_evolution_check(qt, [res.recorded[t] for t in qt])
    write_csv(out / "q_evolution.csv", ("t", "Q", "dQdt", "rhs_normal_form", "rhs_v_over_H_form"),
              np.column_stack([qrep["t"], qrep["Q"], qrep["dQdt"], qrep["rhs_normal_form"],
                               qrep["rhs_v_over_H_form"]]))
    rep.monitor("Q evolution identity (Hopf term weighted by 1/(vH)), t >= 2",
                qrep["mismatch_normal_form"] <= Q_IDENTITY_TOL, f"relative mismatch {qrep['mismatch_normal_form']:.3e}")
    rep.add(f"info  same identity with weight v/H: relative mismatch {qrep['mismatch_v_over_H_form']:.3e}")
    if qrep["negative_rate"] is not None:
        r = qrep["negative_rate"]
        rep.flag("decay rate of the negative part of dQ/dt", r <= -1.0 / cfg.n + RATE_BAND / cfg.n,
                 f"{r:.4f}, constant {qrep['negative_const']:.3e}")
    else:
        rep.add("n/a   negative part of dQ/dt: not enough negative samples")
    if figures:
        from . import plotting
        plotting.plot_series(res.series, out / "series.png", cfg.n)
        plotting.plot_profiles(grid.nodes, {0.0: f0.values, cfg.t_end: f_final.values}, out / "limit.png")
        plotting.plot_q_evolution(qrep, out / "q_evolution.png")
    rep.write(out / "summary.txt")
    return EXIT_MONITOR if rep.failed else EXIT_OK


def cmd_example(cfg: RunConfig, out: Path, figures: bool = False) -> int:
    ks = list(cfg.example_k_list)
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        parts = list(pool.map(lambda k: limit.qk_study([k]), ks))
    table = limit.QkTable(
        k=np.array(ks),
        paper=np.concatenate([p.paper for p in parts]),
        quad_paper_density=np.concatenate([p.quad_paper_density for p in parts]),
        quad_derived_density=np.concatenate([p.quad_derived_density for p in parts]),
    )
    rep = Report()
    rep.add(f"example: f_k = k zeta on S^3, k in {{{', '.join(f'{k:g}' for k in ks)}}}")
    rows = np.column_stack([table.k, table.paper, table.quad_paper_density, table.quad_derived_density])
    footer = None
    if len(ks) >= 2:
        e = table.exponents
        footer = ("exponent", e[0], e[1], e[2])
        rep.add(f"growth exponent, Bessel form: {e[0]:.4f}")
        rep.flag("growth exponent, sqrt(1-zeta^2) density", abs(e[1] - 0.25) <= 0.05, f"{e[1]:.4f} (quarter power 0.25)")
        rep.add(f"growth exponent, round S^3 density: {e[2]:.4f}")
        rep.add("note  the round measure of S^3 has constant density in zeta; the sqrt(1-zeta^2) "
                "density gives a k^(1/4) law, the round density a law close to k^(1/2)")
    spread = float(np.max(table.ratio) / np.min(table.ratio) - 1)
    rep.monitor("Bessel form / quadrature ratio constant in k", spread <= 0.01, f"spread {spread:.3e}")
    grid = ZetaGrid(2, cfg.grid_points)
    fk = max(limit.fk_identity_residual(k, grid) for k in (0.5, 1, 2, 4, 8))
    rep.monitor("linear-factor identity, k in {0.5,1,2,4,8}", fk <= 1e-7, f"max {fk:.3e}")
    write_csv(out / "qk_study.csv", ("k", "qk_paper", "qk_quad_paper_density", "qk_quad_derived_density"),
              rows, footer)
    if figures:
        from . import plotting
        plotting.plot_qk(table, out / "qk_study.png")
    rep.write(out / "summary.txt")
    return EXIT_MONITOR if rep.failed else EXIT_OK


def cmd_verify(seed: int, out: Path | None = None) -> int:
    from .verify import run_checks

    checks = run_checks(seed)
    text = "\n".join([f"verify: seed = {seed}"] + [c.line() for c in checks])
    failed = sum(not c.passed for c in checks)
    text += f"\n{len(checks) - failed}/{len(checks)} properties passed\n"
    sys.stdout.write(text)
    if out is not None:
        (out / "verify.txt").write_text(text)
    return EXIT_VERIFY if failed else EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_VERIFY)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="imcf-chn", description="Inverse mean curvature flow in CH^n")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="key = value configuration file")
    p.add_argument("--seed", type=int, help="RNG seed (overrides the config)")
    p.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
    p.add_argument("--figures", action="store_true", help="also render PNG figures next to the CSVs")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config.read_text()) if args.config else RunConfig()
    except ConfigError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_VERIFY
    except OSError as exc:
        sys.stderr.write(f"cannot read config: {exc}\n")
        return EXIT_VERIFY
    if cfg.command is not None and cfg.command != args.command:
        sys.stderr.write(f"config declares command = {cfg.command} but {args.command} was requested\n")
        return EXIT_VERIFY
    cfg.command = args.command
    if args.seed is not None:
        cfg.seed = args.seed
    out = args.out if args.out is not None else Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        sys.stderr.write(f"cannot create output directory: {exc}\n")
        return EXIT_VERIFY
    if args.command == "verify":
        return cmd_verify(cfg.seed, out)
    handler = {"flow": cmd_flow, "sphere": cmd_sphere, "limit": cmd_limit, "example": cmd_example}[args.command]
    try:
        return handler(cfg, out, args.figures)
    except (flow.MeanConvexityLost, flow.StepFailed) as exc:
        sys.stderr.write(f"solver abort: {exc}\n")
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
