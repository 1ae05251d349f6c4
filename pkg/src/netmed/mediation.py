"""Natural direct and indirect effect estimation from two-stage fits.

With outcome coefficients (beta_w, beta_x) and mediator coefficients Theta for
a treatment contrast (t, t*):

    nde = (t - t*) * beta_t
    nie = (t - t*) * theta_t . beta_x
    total = nde + nie

where beta_t is the treatment entry of beta_w and theta_t the treatment row of
Theta. Variances come from the delta method with the block-diagonal covariance
of (vec Theta, beta):

    sigma2_nde = (t - t*)^2 * Sigma[beta_t]
    sigma2_nie = (t - t*)^2 * (beta_x' Sigma[theta_t] beta_x
                               + theta_t Sigma[beta_x] theta_t')

Sigma[theta_t] gathers the treatment-row entry of each Theta column from the
vec(Theta) covariance and Sigma[beta_x] is the trailing d x d block of the
outcome covariance. The beta-Theta cross covariance is asymptotically zero and
is treated as such, so the total-effect variance is the plain sum. Confidence
intervals are point +/- z_{1 - alpha/2} sqrt(sigma2 / n). All quantities are
invariant to orthogonal re-embedding of the latent positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import TYPE_CHECKING

import numpy as np

from . import linalg
from .embedding import ase, coembed
from .errors import CollinearityError, DimensionError, InputError
from .regression import MediatorFit, OutcomeFit, fit_mediator, fit_outcome

if TYPE_CHECKING:  # pragma: no cover
    from .io_formats import CovariateTable

__all__ = [
    "EffectEstimate",
    "SensitivityRow",
    "MediationReport",
    "RotationCheck",
    "estimate_effects",
    "sensitivity_curve",
    "rotation_invariance_check",
]


@dataclass(frozen=True)
class EffectEstimate:
    """Point estimate, asymptotic variance, and confidence interval for one effect.

    ``sigma2`` estimates the variance of sqrt(n) (estimate - truth), so the
    interval half-width is z_{1 - alpha/2} sqrt(sigma2 / n).
    """

    kind: str
    point: float
    sigma2: float
    ci_low: float
    ci_high: float
    alpha: float
    n: int
    d: int
    contrast: tuple[float, float]


@dataclass(frozen=True)
class SensitivityRow:
    """Effects at one embedding dimension; ``error`` is set when the fit failed."""

    d: int
    nde: EffectEstimate | None
    nie: EffectEstimate | None
    total: EffectEstimate | None
    error: str | None = None


@dataclass(frozen=True, eq=False)
class MediationReport:
    """Full output of a mediation analysis, serializable via io_formats."""

    n: int
    d: int
    side: str
    contrast: tuple[float, float]
    alpha: float
    nde: EffectEstimate
    nie: EffectEstimate
    total: EffectEstimate
    coef_names: tuple[str, ...]
    beta: np.ndarray
    beta_se: np.ndarray
    theta: np.ndarray
    sensitivity: tuple[SensitivityRow, ...] | None = None


@dataclass(frozen=True)
class RotationCheck:
    """Maximum deviations of effects under an orthogonal re-embedding."""

    max_deviation: float
    nde_point: float
    nde_sigma2: float
    nie_point: float
    nie_sigma2: float
    tol: float


def _effect(kind, point, sigma2, z, alpha, n, d, contrast) -> EffectEstimate:
    sigma2 = max(float(sigma2), 0.0)
    half = z * math.sqrt(sigma2 / n)
    return EffectEstimate(
        kind=kind,
        point=float(point),
        sigma2=sigma2,
        ci_low=float(point - half),
        ci_high=float(point + half),
        alpha=alpha,
        n=n,
        d=d,
        contrast=contrast,
    )


def treatment_vec_indices(w_cols: int, d: int, treatment_index: int) -> list[int]:
    """Positions of the treatment row of each Theta column inside vec(Theta)."""
    return [j * w_cols + treatment_index for j in range(d)]


def estimate_effects(
    out: OutcomeFit,
    med: MediatorFit,
    t: float = 1.0,
    t_star: float = 0.0,
    alpha: float = 0.05,
    treatment_index: int = 1,
) -> tuple[EffectEstimate, EffectEstimate, EffectEstimate]:
    """Natural direct, indirect, and total effect estimates with intervals.

    Parameters
    ----------
    out, med : OutcomeFit, MediatorFit
        Fits sharing the same design (n, p, d).
    t, t_star : float
        Treatment contrast; effects scale with (t - t_star).
    alpha : float
        Interval level in (0, 1); intervals are (1 - alpha) two-sided.
    treatment_index : int
        Column of W holding the treatment (1 under the [1, T, C] ordering).

    Returns
    -------
    (nde, nie, total) : tuple of EffectEstimate
        ``total.point`` equals ``nde.point + nie.point`` exactly; its variance
        is the sum of the two (zero cross term).
    """
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must be in (0, 1), got {alpha}")
    if (out.n, out.p, out.d) != (med.n, med.p, med.d):
        raise DimensionError(
            f"fits disagree: outcome (n,p,d)=({out.n},{out.p},{out.d}) "
            f"vs mediator ({med.n},{med.p},{med.d})"
        )
    q = out.w_cols
    d = out.d
    n = out.n
    if not 0 <= treatment_index < q:
        raise DimensionError(f"treatment_index {treatment_index} outside W's {q} columns")

    dt = t - t_star
    z = NormalDist().inv_cdf(1.0 - alpha / 2.0)
    contrast = (float(t), float(t_star))

    beta_x = out.beta_x
    theta_t = med.theta[treatment_index]

    nde_point = dt * out.beta[treatment_index]
    nde_sigma2 = dt**2 * out.sigma_beta[treatment_index, treatment_index]

    vec_idx = treatment_vec_indices(q, d, treatment_index)
    sigma_theta_t = med.sigma_theta[np.ix_(vec_idx, vec_idx)]
    sigma_beta_x = out.sigma_beta[q:, q:]
    nie_point = dt * float(theta_t @ beta_x)
    nie_sigma2 = dt**2 * (
        float(beta_x @ sigma_theta_t @ beta_x) + float(theta_t @ sigma_beta_x @ theta_t)
    )

    nde = _effect("nde", nde_point, nde_sigma2, z, alpha, n, d, contrast)
    nie = _effect("nie", nie_point, nie_sigma2, z, alpha, n, d, contrast)
    total = _effect(
        "total", nde.point + nie.point, nde.sigma2 + nie.sigma2, z, alpha, n, d, contrast
    )
    return nde, nie, total


def _embedding_positions(a: np.ndarray, d: int, side: str) -> np.ndarray:
    if side == "symmetric":
        return ase(a, d).positions
    left, right = coembed(a, d)
    return left.positions if side == "left" else right.positions


def sensitivity_curve(
    a,
    table: "CovariateTable",
    d_range: tuple[int, int],
    side: str = "symmetric",
    alpha: float = 0.05,
    contrast: tuple[float, float] = (1.0, 0.0),
) -> list[SensitivityRow]:
    """Effects re-estimated across a grid of embedding dimensions.

    The decomposition is computed once at d_max and truncated per d (leading
    singular vectors nest). Dimensions whose fit is collinear produce a row
    flagged with the error message instead of failing the whole curve.

    Parameters
    ----------
    a : array-like
        Adjacency matrix.
    table : CovariateTable
        Covariates with outcome/treatment/control bindings; row order must
        match the adjacency matrix.
    d_range : (int, int)
        Inclusive (d_min, d_max) with 1 <= d_min <= d_max <= feasible rank.
    side : {"symmetric", "left", "right"}
    """
    a = linalg.as_matrix(a, "adjacency matrix")
    if side not in ("symmetric", "left", "right"):
        raise InputError(f"unknown side {side!r}")
    d_min, d_max = int(d_range[0]), int(d_range[1])
    feasible = min(a.shape)
    if not 1 <= d_min <= d_max:
        raise DimensionError(f"invalid d range [{d_min}, {d_max}]")
    if d_max > feasible:
        raise DimensionError(f"d_max={d_max} exceeds feasible rank {feasible}")

    w = table.design_matrix()
    y = table.outcome_values()
    if w.shape[0] != a.shape[0]:
        raise DimensionError(
            f"covariate rows ({w.shape[0]}) do not match network nodes ({a.shape[0]})"
        )

    positions_full = _embedding_positions(a, d_max, side)
    t, t_star = contrast

    rows: list[SensitivityRow] = []
    for d in range(d_min, d_max + 1):
        xhat = positions_full[:, :d]
        try:
            out = fit_outcome(w, xhat, y)
            med = fit_mediator(w, xhat)
            nde, nie, total = estimate_effects(out, med, t, t_star, alpha)
            rows.append(SensitivityRow(d=d, nde=nde, nie=nie, total=total))
        except CollinearityError as exc:
            rows.append(SensitivityRow(d=d, nde=None, nie=None, total=None, error=str(exc)))
    return rows


def rotation_invariance_check(
    out: OutcomeFit,
    med: MediatorFit,
    q_mat,
    t: float = 1.0,
    t_star: float = 0.0,
    alpha: float = 0.05,
    treatment_index: int = 1,
    tol: float = 1e-8,
) -> RotationCheck:
    """Verify effects are unchanged when Xhat is replaced by Xhat @ Q.

    Refits both models on the rotated latent positions and compares NDE and
    NIE points and variances. Raises AssertionError if any deviation exceeds
    ``tol``; otherwise returns the deviations.
    """
    q_mat = linalg.as_matrix(q_mat, "q_mat")
    d = out.d
    if q_mat.shape != (d, d):
        raise DimensionError(f"q_mat must be {d}x{d}, got {q_mat.shape}")
    if np.max(np.abs(q_mat.T @ q_mat - np.eye(d))) > 1e-8:
        raise InputError("q_mat is not orthogonal")

    base = estimate_effects(out, med, t, t_star, alpha, treatment_index)
    out_rot = fit_outcome(out.w, out.xhat @ q_mat, out.y)
    med_rot = fit_mediator(med.w, med.xhat @ q_mat)
    rotated = estimate_effects(out_rot, med_rot, t, t_star, alpha, treatment_index)

    devs = RotationCheck(
        max_deviation=0.0,
        nde_point=abs(base[0].point - rotated[0].point),
        nde_sigma2=abs(base[0].sigma2 - rotated[0].sigma2),
        nie_point=abs(base[1].point - rotated[1].point),
        nie_sigma2=abs(base[1].sigma2 - rotated[1].sigma2),
        tol=tol,
    )
    max_dev = max(devs.nde_point, devs.nde_sigma2, devs.nie_point, devs.nie_sigma2)
    devs = RotationCheck(
        max_deviation=max_dev,
        nde_point=devs.nde_point,
        nde_sigma2=devs.nde_sigma2,
        nie_point=devs.nie_point,
        nie_sigma2=devs.nie_sigma2,
        tol=tol,
    )
    if max_dev > tol:
        raise AssertionError(
            f"effects changed by {max_dev:.3e} under orthogonal re-embedding (tol {tol:.1e})"
        )
    return devs
