"""Monte Carlo engine for the simulation studies.

Each replicate draws a fresh scenario (network, covariates, outcome, and
per-draw true effects), embeds the sampled network, runs the two-stage fits,
and checks the resulting intervals against that replicate's truth. Replicates
are seeded as (master_seed, n, replicate_index), so execution order never
changes results, and cells sharing an n reuse the same draws across the d_fit
grid (the embedding is computed once at max d_fit and truncated).

Coefficient errors are reported after aligning the estimated latent basis to
the true one with an orthogonal Procrustes rotation, which makes elementwise
comparison meaningful despite rotational non-identifiability.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import linalg
from .errors import CollinearityError, InputError, ParseError, RankError
from .graph_models import simulate_scenario
from .mediation import estimate_effects
from .regression import fit_mediator, fit_outcome

__all__ = [
    "SimScenario",
    "CellStats",
    "SimReport",
    "run_scenario",
    "misspecification_sweep",
    "mse_slope",
    "parse_scenario",
]

_MODELS = ("informative", "uninformative")
_NULL_MODES = ("none", "zero_nde", "zero_nie")


@dataclass(frozen=True)
class SimScenario:
    """Configuration of one simulation study."""

    model: str
    d: int
    n_grid: tuple
    d_fit: object = None
    reps: int = 100
    alpha: float = 0.05
    master_seed: int = 0
    null_mode: str = "none"

    def __post_init__(self):
        if self.model not in _MODELS:
            raise InputError(f"unknown model {self.model!r}")
        if self.null_mode not in _NULL_MODES:
            raise InputError(f"unknown null_mode {self.null_mode!r}")
        if self.reps < 1:
            raise InputError(f"reps must be >= 1, got {self.reps}")
        if not 0.0 < self.alpha < 1.0:
            raise InputError(f"alpha must be in (0, 1), got {self.alpha}")
        n_grid = tuple(int(n) for n in self.n_grid)
        if not n_grid or any(b <= a for a, b in zip(n_grid, n_grid[1:])):
            raise InputError(f"n_grid must be strictly increasing, got {n_grid}")
        object.__setattr__(self, "n_grid", n_grid)
        if self.d_fit is not None:
            if np.isscalar(self.d_fit):
                object.__setattr__(self, "d_fit", int(self.d_fit))
            else:
                object.__setattr__(self, "d_fit", tuple(int(v) for v in self.d_fit))

    @property
    def d_fits(self) -> tuple:
        if self.d_fit is None:
            return (self.d,)
        if isinstance(self.d_fit, int):
            return (self.d_fit,)
        return self.d_fit


@dataclass(frozen=True)
class CellStats:
    """Aggregated replicate results for one (n, d_fit) cell.

    ``bias_se_*`` are Monte Carlo standard errors of the bias estimates.
    ``theta_err`` / ``beta_err`` are mean Procrustes-aligned elementwise l1
    errors, and ``beta_x_bias`` the mean aligned bias of each latent outcome
    coefficient; all three are populated only where d_fit equals the true d.
    """

    n: int
    d_fit: int
    rep_count: int
    excluded: int
    mse_nde: float
    mse_nie: float
    bias_nde: float
    bias_nie: float
    bias_se_nde: float
    bias_se_nie: float
    coverage_nde: float
    coverage_nie: float
    theta_err: float
    beta_err: float
    beta_x_bias: tuple | None = None


@dataclass(frozen=True)
class SimReport:
    """All cells of a simulation run plus the scenario that produced them."""

    scenario: SimScenario
    cells: tuple

    def cell(self, n: int, d_fit: int) -> CellStats:
        for cell in self.cells:
            if cell.n == n and cell.d_fit == d_fit:
                return cell
        raise KeyError(f"no cell for n={n}, d_fit={d_fit}")

    def summary_dict(self) -> dict:
        scenario = {
            "model": self.scenario.model,
            "d": self.scenario.d,
            "n_grid": list(self.scenario.n_grid),
            "d_fit": list(self.scenario.d_fits),
            "reps": self.scenario.reps,
            "alpha": self.scenario.alpha,
            "master_seed": self.scenario.master_seed,
            "null_mode": self.scenario.null_mode,
        }
        cells = []
        for cell in self.cells:
            entry = {
                "n": cell.n,
                "d_fit": cell.d_fit,
                "rep_count": cell.rep_count,
                "excluded": cell.excluded,
                "mse_nde": cell.mse_nde,
                "mse_nie": cell.mse_nie,
                "bias_nde": cell.bias_nde,
                "bias_nie": cell.bias_nie,
                "bias_se_nde": cell.bias_se_nde,
                "bias_se_nie": cell.bias_se_nie,
                "coverage_nde": cell.coverage_nde,
                "coverage_nie": cell.coverage_nie,
                "theta_err": cell.theta_err,
                "beta_err": cell.beta_err,
                "beta_x_bias": list(cell.beta_x_bias) if cell.beta_x_bias is not None else None,
            }
            cells.append(entry)
        return {"scenario": scenario, "cells": cells}


@dataclass(frozen=True)
class _RepResult:
    err_nde: float
    err_nie: float
    cover_nde: bool
    cover_nie: bool
    theta_err: float | None = None
    beta_err: float | None = None
    beta_x_bias: tuple | None = None


def _one_rep(scenario: SimScenario, n: int, rep: int, d_fits, d_max: int) -> dict:
    """Run one replicate at sample size n, returning a result per d_fit cell."""
    try:
        draw = simulate_scenario(
            scenario.model,
            n,
            scenario.d,
            seed=(scenario.master_seed, n, rep),
            null_mode=scenario.null_mode,
        )
    except (RankError, CollinearityError) as exc:
        return {d_fit: ("excluded", str(exc)) for d_fit in d_fits}

    fac = linalg.truncated_svd(draw.a, d_max)
    positions = fac.u * np.sqrt(fac.s)

    out_by_fit = {}
    for d_fit in d_fits:
        xhat = positions[:, :d_fit]
        try:
            out = fit_outcome(draw.w, xhat, draw.y)
            med = fit_mediator(draw.w, xhat)
            nde, nie, _ = estimate_effects(out, med, 1.0, 0.0, scenario.alpha)
        except CollinearityError as exc:
            out_by_fit[d_fit] = ("excluded", str(exc))
            continue

        theta_err = beta_err = None
        beta_x_bias = None
        if d_fit == scenario.d:
            rotation = linalg.procrustes(xhat, draw.x)
            theta_aligned = med.theta @ rotation
            beta_x_aligned = rotation.T @ out.beta_x
            q = draw.w.shape[1]
            theta_err = float(np.mean(np.abs(theta_aligned - draw.theta_true)))
            abs_errors = np.concatenate(
                [
                    np.abs(out.beta_w - draw.beta_true[:q]),
                    np.abs(beta_x_aligned - draw.beta_true[q:]),
                ]
            )
            beta_err = float(np.mean(abs_errors))
            beta_x_bias = tuple(float(v) for v in beta_x_aligned - draw.beta_true[q:])

        out_by_fit[d_fit] = (
            "ok",
            _RepResult(
                err_nde=nde.point - draw.nde_true,
                err_nie=nie.point - draw.nie_true,
                cover_nde=bool(nde.ci_low <= draw.nde_true <= nde.ci_high),
                cover_nie=bool(nie.ci_low <= draw.nie_true <= nie.ci_high),
                theta_err=theta_err,
                beta_err=beta_err,
                beta_x_bias=beta_x_bias,
            ),
        )
    return out_by_fit


def _aggregate(n: int, d_fit: int, records, excluded: int) -> CellStats:
    count = len(records)
    if count == 0:
        nan = float("nan")
        return CellStats(
            n=n, d_fit=d_fit, rep_count=0, excluded=excluded,
            mse_nde=nan, mse_nie=nan, bias_nde=nan, bias_nie=nan,
            bias_se_nde=nan, bias_se_nie=nan, coverage_nde=nan, coverage_nie=nan,
            theta_err=nan, beta_err=nan, beta_x_bias=None,
        )
    err_nde = np.array([r.err_nde for r in records])
    err_nie = np.array([r.err_nie for r in records])

    def _se(errors):
        if count < 2:
            return float("nan")
        return float(np.std(errors, ddof=1) / math.sqrt(count))

    have_align = records[0].theta_err is not None
    theta_err = float(np.mean([r.theta_err for r in records])) if have_align else float("nan")
    beta_err = float(np.mean([r.beta_err for r in records])) if have_align else float("nan")
    beta_x_bias = None
    if have_align:
        beta_x_bias = tuple(
            float(v) for v in np.mean([r.beta_x_bias for r in records], axis=0)
        )

    return CellStats(
        n=n,
        d_fit=d_fit,
        rep_count=count,
        excluded=excluded,
        mse_nde=float(np.mean(err_nde**2)),
        mse_nie=float(np.mean(err_nie**2)),
        bias_nde=float(np.mean(err_nde)),
        bias_nie=float(np.mean(err_nie)),
        bias_se_nde=_se(err_nde),
        bias_se_nie=_se(err_nie),
        coverage_nde=float(np.mean([r.cover_nde for r in records])),
        coverage_nie=float(np.mean([r.cover_nie for r in records])),
        theta_err=theta_err,
        beta_err=beta_err,
        beta_x_bias=beta_x_bias,
    )


def _worker_count(threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("NETMED_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def run_scenario(scenario: SimScenario, threads: int | None = None) -> SimReport:
    """Execute all (n, d_fit) cells of a scenario.

    Replicates may run on a worker pool (size capped by ``threads`` or the
    NETMED_THREADS environment variable); results are reduced in replicate
    order, so the report is identical regardless of scheduling. Replicates
    whose fit is collinear (or whose latent construction is rank deficient)
    are excluded and counted in the cell's ``excluded`` field.
    """
    d_fits = scenario.d_fits
    d_max = max(d_fits)
    workers = _worker_count(threads)

    cells = []
    for n in scenario.n_grid:
        if d_max > n:
            raise InputError(f"d_fit={d_max} exceeds n={n}")
        rep_outputs: list[dict] = [None] * scenario.reps
        if workers > 1 and scenario.reps > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = {
                    pool.submit(_one_rep, scenario, n, rep, d_fits, d_max): rep
                    for rep in range(scenario.reps)
                }
                for future, rep in futures.items():
                    rep_outputs[rep] = future.result()
        else:
            for rep in range(scenario.reps):
                rep_outputs[rep] = _one_rep(scenario, n, rep, d_fits, d_max)

        for d_fit in d_fits:
            records = []
            excluded = 0
            for output in rep_outputs:
                status, payload = output[d_fit]
                if status == "ok":
                    records.append(payload)
                else:
                    excluded += 1
            cells.append(_aggregate(n, d_fit, records, excluded))
    return SimReport(scenario=scenario, cells=tuple(cells))


def misspecification_sweep(scenario: SimScenario, threads: int | None = None) -> SimReport:
    """Run a scenario whose d_fit grid brackets the true dimension."""
    d_fits = scenario.d_fits
    if min(d_fits) >= scenario.d or max(d_fits) <= scenario.d:
        raise InputError(
            f"d_fit grid {d_fits} must span below and above the true d={scenario.d}"
        )
    return run_scenario(scenario, threads=threads)


def mse_slope(report: SimReport) -> dict:
    """Least-squares slope of log(MSE) on log(n) for each effect.

    Uses the cells fit at the scenario's true dimension. Cells with
    nonpositive or non-finite MSE are excluded with a warning; at least three
    usable points are required.
    """
    slopes = {}
    true_d = report.scenario.d
    for effect in ("nde", "nie"):
        points = [
            (cell.n, getattr(cell, f"mse_{effect}"))
            for cell in report.cells
            if cell.d_fit == true_d
        ]
        usable = [(n, mse) for n, mse in points if np.isfinite(mse) and mse > 0]
        if len(usable) < len(points):
            warnings.warn(
                f"{len(points) - len(usable)} cell(s) with nonpositive MSE excluded "
                f"from the {effect} slope",
                stacklevel=2,
            )
        if len(usable) < 3:
            raise InputError(
                f"need at least 3 usable n-grid points for the {effect} slope, "
                f"got {len(usable)}"
            )
        log_n = np.log([n for n, _ in usable])
        log_mse = np.log([mse for _, mse in usable])
        slopes[effect] = float(np.polyfit(log_n, log_mse, 1)[0])
    return slopes


def parse_scenario(path) -> SimScenario:
    """Parse a ``key = value`` scenario file.

    Recognized keys: model, d, n_grid (comma-separated), d_fit (single value,
    comma list, or ``lo:hi`` range), reps, alpha, master_seed, null_mode.
    Blank lines and ``#`` comments are ignored.
    """
    path = Path(path)
    values: dict[str, str] = {}
    with path.open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"{path}:{lineno}: expected 'key = value'", line=lineno)
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()

    required = ("model", "d", "n_grid")
    missing = [key for key in required if key not in values]
    if missing:
        raise InputError(f"{path}: missing scenario key(s): {missing}")

    def _parse_d_fit(text: str):
        if ":" in text:
            lo, _, hi = text.partition(":")
            return tuple(range(int(lo), int(hi) + 1))
        if "," in text:
            return tuple(int(v) for v in text.split(","))
        return int(text)

    try:
        return SimScenario(
            model=values["model"],
            d=int(values["d"]),
            n_grid=tuple(int(v) for v in values["n_grid"].split(",")),
            d_fit=_parse_d_fit(values["d_fit"]) if "d_fit" in values else None,
            reps=int(values.get("reps", 100)),
            alpha=float(values.get("alpha", 0.05)),
            master_seed=int(values.get("master_seed", 0)),
            null_mode=values.get("null_mode", "none"),
        )
    except ValueError as exc:
        raise InputError(f"{path}: invalid scenario value: {exc}") from None
