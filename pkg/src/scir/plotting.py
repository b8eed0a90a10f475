"""Figure rendering for scenario outputs.

Reads the delimited files a scenario produced and draws a single PNG next
to them. Uses the Agg backend so rendering works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _read_csv(path: Path):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, data


def _column(header, data, name):
    return data[:, header.index(name)]


def _plot_prevalence(scenario, out_dir: Path, ax) -> bool:
    drew = False
    for engine, style in (("meanfield", "-"), ("gillespie", "--")):
        path = out_dir / f"{scenario.name}_{engine}.csv"
        if not path.exists():
            continue
        header, data = _read_csv(path)
        s2 = _column(header, data, "s2")
        prev = _column(header, data, "prevalence")
        group_cols = [c for c in header if c not in ("s2", "prevalence", "stderr", "runs")]
        group_vals = np.stack([_column(header, data, c) for c in group_cols], axis=1) \
            if group_cols else np.zeros((len(s2), 0))
        for combo in np.unique(group_vals, axis=0):
            mask = np.all(group_vals == combo, axis=1)
            tag = ", ".join(f"{c}={v:g}" for c, v in zip(group_cols, combo)
                            if len(np.unique(group_vals[:, group_cols.index(c)])) > 1)
            label = engine if not tag else f"{engine}: {tag}"
            if engine == "gillespie" and "stderr" in header:
                err = _column(header, data, "stderr")[mask]
                ax.errorbar(s2[mask], prev[mask], yerr=2 * err, fmt="o" + style,
                            ms=3, lw=1, capsize=2, label=label)
            else:
                ax.plot(s2[mask], prev[mask], style, lw=1.5, label=label)
            drew = True
    ax.set_xlabel("activity probability $S^2$")
    ax.set_ylabel("prevalence")
    return drew


def _plot_timeseries(scenario, out_dir: Path, ax) -> bool:
    drew = False
    for path in sorted(out_dir.glob(f"{scenario.name}_*_etaprime_*.csv")):
        header, data = _read_csv(path)
        t = _column(header, data, "t")
        tag = path.stem.replace(f"{scenario.name}_", "")
        for name in ("mean_S", "mean_C", "mean_I", "mean_R"):
            ax.plot(t, _column(header, data, name), lw=1,
                    label=f"{tag} {name[-1]}")
        drew = True
    ax.set_xlabel("t")
    ax.set_ylabel("mean compartment size")
    return drew


def _plot_r0_kappa(scenario, out_dir: Path, ax) -> bool:
    path = out_dir / f"{scenario.name}_r0_vs_kappa.csv"
    if not path.exists():
        return False
    header, data = _read_csv(path)
    kappa = _column(header, data, "kappa")
    s2 = _column(header, data, "s2")
    beta_c = _column(header, data, "beta_c")
    r0 = _column(header, data, "r0")
    for s2v in np.unique(s2):
        for bcv in np.unique(beta_c):
            mask = (s2 == s2v) & (beta_c == bcv)
            if mask.any():
                ax.plot(kappa[mask], r0[mask], lw=1.5,
                        label=f"$S^2$={s2v:g}, $\\beta_C$={bcv:g}")
    ax.axhline(1.0, color="gray", lw=0.8, ls=":")
    ax.set_xlabel("$\\kappa$")
    ax.set_ylabel("$R_0$")
    return True


def _plot_budget(scenario, out_dir: Path, ax) -> bool:
    path = out_dir / f"{scenario.name}_budget_sweep.csv"
    if not path.exists():
        return False
    header, data = _read_csv(path)
    budget = _column(header, data, "budget")
    for name, marker in (("lambda_sgp", "o"), ("lambda_degree", "s"),
                         ("lambda_closeness", "^")):
        ax.plot(budget, _column(header, data, name), marker + "-", ms=4, lw=1.2,
                label=name.replace("lambda_", ""))
    ax.set_xlabel("budget")
    ax.set_ylabel("spectral abscissa $\\lambda_1(Q)$")
    return True


def _plot_scatter(scenario, out_dir: Path, ax) -> bool:
    path = out_dir / f"{scenario.name}_rates.csv"
    if not path.exists():
        return False
    header, data = _read_csv(path)
    degree = _column(header, data, "average_degree")
    rate = _column(header, data, "gamma1_opt")
    cls = _column(header, data, "class").astype(int)
    for c in np.unique(cls):
        mask = cls == c
        ax.scatter(degree[mask], rate[mask], s=12, label=f"class {c}")
    ax.set_xlabel("average degree")
    ax.set_ylabel("optimal activity rate $\\gamma^1_i$")
    return True


_PLOTTERS = {
    "prevalence_sweep": _plot_prevalence,
    "compartment_timeseries": _plot_timeseries,
    "r0_kappa": _plot_r0_kappa,
    "budget_sweep": _plot_budget,
    "rate_scatter": _plot_scatter,
}


def render_scenario(scenario, out_dir) -> Path | None:
    """Draw the scenario's figure from its CSV outputs; returns the PNG path."""
    out_dir = Path(out_dir)
    plotter = _PLOTTERS.get(scenario.kind)
    if plotter is None:
        return None
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=150)
    try:
        drew = plotter(scenario, out_dir, ax)
        if not drew:
            return None
        ax.legend(fontsize=7, frameon=False)
        ax.set_title(scenario.name)
        fig.tight_layout()
        path = out_dir / f"{scenario.name}.png"
        fig.savefig(path)
        return path
    finally:
        plt.close(fig)
