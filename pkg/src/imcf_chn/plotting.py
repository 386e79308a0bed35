"""Figures written next to the CSV output (headless Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams.update({
    "figure.figsize": (6.4, 4.4),
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 120,
})

DECAY_COLUMNS = ("sup_grad_phi2", "H_dev_sup", "dev_full_max", "dev_horiz_max", "sup_hess_phi2")


def plot_series(series, path, n: int):
    t = series.column("t")
    fig, (ax0, ax1) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 7.0))
    for name in DECAY_COLUMNS:
        y = series.column(name)
        if np.any(y > 0):
            ax0.semilogy(t, np.where(y > 0, y, np.nan), label=name)
    y0 = series.column("sup_grad_phi2")[0] or 1.0
    ax0.semilogy(t, y0 * np.exp(-t / n), "k--", lw=0.8, label=f"exp(-t/{n})")
    ax0.set_ylabel("monitor")
    ax0.legend(fontsize=8, ncol=2)
    ax1.plot(t, series.column("log_area_residual"), label="log|M_t| - log|M_0| - t")
    ax1.set_xlabel("t")
    ax1.set_ylabel("volume-law residual")
    ax1.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_profiles(zeta, profiles: dict, path, ylabel: str = "f_t"):
    fig, ax = plt.subplots()
    for t, vals in sorted(profiles.items()):
        ax.plot(zeta, vals, label=f"t = {t:g}")
    ax.set_xlabel("zeta")
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_sphere(t, rho_num, rho_exact, path):
    fig, (ax0, ax1) = plt.subplots(2, 1, sharex=True)
    ax0.plot(t, rho_num, label="RK4")
    ax0.plot(t, rho_exact, "k--", lw=0.8, label="implicit solution")
    ax0.set_ylabel("rho(t)")
    ax0.legend(fontsize=8)
    ax1.semilogy(t, np.maximum(np.abs(rho_num - rho_exact), 1e-17))
    ax1.set_xlabel("t")
    ax1.set_ylabel("|error|")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_qk(table, path):
    fig, ax = plt.subplots()
    e = table.exponents
    ax.loglog(table.k, table.paper, "o-", label=f"Bessel form (slope {e[0]:.3f})")
    ax.loglog(table.k, table.quad_paper_density, "x--", label=f"sqrt(1-zeta^2) density (slope {e[1]:.3f})")
    ax.loglog(table.k, table.quad_derived_density, "s-", label=f"round S^3 density (slope {e[2]:.3f})")
    ax.set_xlabel("k")
    ax.set_ylabel("Q_k (up to a constant)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_q_evolution(report, path):
    fig, ax = plt.subplots()
    t = report["t"]
    ax.semilogy(t, np.abs(report["dQdt"]), label="|dQ/dt| (differenced)")
    ax.semilogy(t, np.abs(report["rhs_normal_form"]), "--", label="identity, weight 1/(vH)")
    ax.semilogy(t, np.abs(report["rhs_v_over_H_form"]), ":", label="identity, weight v/H")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
