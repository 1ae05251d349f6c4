"""Figure rendering for sensitivity curves and simulation reports.

Figures are drawn straight onto matplotlib Figure objects (no pyplot global
state) and written as PNG files next to the delimited reports they accompany.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

__all__ = [
    "plot_sensitivity_curve",
    "plot_mse",
    "plot_coverage",
    "plot_bias",
    "simulation_figures",
]

_COLORS = {"nde": "#1b9e8f", "nie": "#e08214", "total": "#5e5e5e"}


def _save(fig: Figure, path) -> None:
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)


def plot_sensitivity_curve(rows, path, title: str | None = None) -> None:
    """Effect estimates and CIs as a function of the embedding dimension."""
    fig = Figure(figsize=(7.0, 4.5))
    ax = fig.subplots()
    for kind in ("nde", "nie"):
        good = [row for row in rows if getattr(row, kind) is not None]
        if not good:
            continue
        ds = [row.d for row in good]
        effects = [getattr(row, kind) for row in good]
        ax.plot(ds, [e.point for e in effects], marker="o", ms=3.5,
                color=_COLORS[kind], label=kind.upper())
        ax.fill_between(ds, [e.ci_low for e in effects], [e.ci_high for e in effects],
                        color=_COLORS[kind], alpha=0.18, linewidth=0)
    ax.axhline(0.0, color="gray", linewidth=0.8, linestyle=":")
    ax.set_xlabel("embedding dimension $d$")
    ax.set_ylabel("estimated effect")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    _save(fig, path)


def _cells_by_d_fit(report):
    groups: dict[int, list] = {}
    for cell in report.cells:
        groups.setdefault(cell.d_fit, []).append(cell)
    return groups


def plot_mse(report, path) -> None:
    """Mean squared error versus n on log-log axes, one line per effect/d_fit."""
    fig = Figure(figsize=(7.0, 4.5))
    ax = fig.subplots()
    groups = _cells_by_d_fit(report)
    multi = len(groups) > 1
    for d_fit, cells in sorted(groups.items()):
        for kind in ("nde", "nie"):
            ns = [c.n for c in cells]
            mses = [getattr(c, f"mse_{kind}") for c in cells]
            label = f"{kind.upper()}" + (f" (d_fit={d_fit})" if multi else "")
            ax.plot(ns, mses, marker="o", ms=3.5, color=_COLORS[kind],
                    alpha=0.9 if not multi else 0.6, label=label)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("number of nodes $n$")
    ax.set_ylabel("mean squared error")
    ax.legend(frameon=False, fontsize=8)
    _save(fig, path)


def plot_coverage(report, path) -> None:
    """Empirical CI coverage versus n (or d_fit for sweeps) with the nominal line."""
    fig = Figure(figsize=(7.0, 4.5))
    ax = fig.subplots()
    groups = _cells_by_d_fit(report)
    sweep = len(groups) > 1 and len(report.scenario.n_grid) == 1
    if sweep:
        d_fits = sorted(groups)
        for kind in ("nde", "nie"):
            ys = [getattr(groups[d][0], f"coverage_{kind}") for d in d_fits]
            ax.plot(d_fits, ys, marker="o", ms=3.5, color=_COLORS[kind], label=kind.upper())
        ax.axvline(report.scenario.d, color="gray", linewidth=0.8, linestyle="--")
        ax.set_xlabel("fitted dimension $d$")
    else:
        for d_fit, cells in sorted(groups.items()):
            for kind in ("nde", "nie"):
                ax.plot([c.n for c in cells],
                        [getattr(c, f"coverage_{kind}") for c in cells],
                        marker="o", ms=3.5, color=_COLORS[kind], label=kind.upper())
        ax.set_xscale("log")
        ax.set_xlabel("number of nodes $n$")
    ax.axhline(1.0 - report.scenario.alpha, color="black", linewidth=0.8, linestyle="--")
    ax.set_ylim(0.0, 1.02)
    ax.set_ylabel("coverage")
    ax.legend(frameon=False)
    _save(fig, path)


def plot_bias(report, path) -> None:
    """Bias versus fitted dimension with 3-standard-error bars."""
    fig = Figure(figsize=(7.0, 4.5))
    ax = fig.subplots()
    groups = _cells_by_d_fit(report)
    d_fits = sorted(groups)
    for kind in ("nde", "nie"):
        biases = np.array([getattr(groups[d][0], f"bias_{kind}") for d in d_fits])
        ses = np.array([getattr(groups[d][0], f"bias_se_{kind}") for d in d_fits])
        ax.errorbar(d_fits, biases, yerr=3 * ses, marker="o", ms=3.5,
                    color=_COLORS[kind], capsize=2, label=kind.upper())
    ax.axvline(report.scenario.d, color="gray", linewidth=0.8, linestyle="--")
    ax.axhline(0.0, color="black", linewidth=0.8, linestyle=":")
    ax.set_xlabel("fitted dimension $d$")
    ax.set_ylabel("bias")
    ax.legend(frameon=False)
    _save(fig, path)


def simulation_figures(report, prefix) -> list:
    """Render the standard figures for a simulation report.

    Writes ``<prefix>_mse.png`` and ``<prefix>_coverage.png`` always, plus
    ``<prefix>_bias.png`` when the report sweeps more than one d_fit. Returns
    the written paths.
    """
    prefix = str(prefix)
    written = []
    if len(report.scenario.n_grid) > 1:
        path = f"{prefix}_mse.png"
        plot_mse(report, path)
        written.append(path)
    path = f"{prefix}_coverage.png"
    plot_coverage(report, path)
    written.append(path)
    if len(report.scenario.d_fits) > 1:
        path = f"{prefix}_bias.png"
        plot_bias(report, path)
        written.append(path)
    return written
