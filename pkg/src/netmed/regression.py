"""Two-stage least squares fits with heteroskedasticity-robust covariances.

The outcome model regresses Y on the stacked design D = [W, Xhat], where
W = [1, T, C] holds the observed node covariates and Xhat the estimated latent
positions. The mediator model regresses Xhat on W. Both fits report
Huber-White sandwich covariances A^{-1} B A^{-T} with

    outcome:  A = D^T D / n,              B = (1/n) sum_i e_i^2 D_i^T D_i
    mediator: A = I_d kron (W^T W / n),   B = (1/n) sum_i xi_i^T xi_i kron W_i^T W_i

where e are outcome residuals and xi the (n, d) mediator residuals. The
mediator covariance is for vec(Theta) under column-stacking, so entry
j*(p+2) + a of vec(Theta) is coefficient (a, j). No degrees-of-freedom
correction is applied by default (HC0); pass ``hc1=True`` for the n/(n-k)
adjustment.

Coefficients are solved by SVD-based least squares rather than explicit Gram
inversion; the explicit normal-equation form is kept as a test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import CollinearityError, DimensionError, InputError

__all__ = ["OutcomeFit", "MediatorFit", "fit_outcome", "fit_mediator", "fit_outcome_fwl"]

_RANK_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class OutcomeFit:
    """OLS fit of the outcome model Y ~ [W, Xhat]."""

    beta: np.ndarray
    residuals: np.ndarray
    sigma_beta: np.ndarray
    n: int
    p: int
    d: int
    a_mat: np.ndarray
    b_mat: np.ndarray
    w: np.ndarray
    xhat: np.ndarray
    y: np.ndarray

    @property
    def w_cols(self) -> int:
        return self.w.shape[1]

    @property
    def beta_w(self) -> np.ndarray:
        return self.beta[: self.w_cols]

    @property
    def beta_x(self) -> np.ndarray:
        return self.beta[self.w_cols :]


@dataclass(frozen=True, eq=False)
class MediatorFit:
    """OLS fit of the mediator model Xhat ~ W."""

    theta: np.ndarray
    residuals: np.ndarray
    sigma_theta: np.ndarray
    n: int
    p: int
    d: int
    a_mat: np.ndarray
    b_mat: np.ndarray
    w: np.ndarray
    xhat: np.ndarray

    @property
    def w_cols(self) -> int:
        return self.w.shape[1]


def _as_vector(y, n: int, name: str) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 2 and 1 in y.shape:
        y = y.ravel()
    if y.ndim != 1 or y.shape[0] != n:
        raise DimensionError(f"{name} must be a length-{n} vector, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise InputError(f"{name} contains non-finite entries")
    return y


def _checked_svd(design: np.ndarray, what: str):
    """Full SVD of a design matrix, raising CollinearityError when rank deficient."""
    u, s, vt = np.linalg.svd(design, full_matrices=False)
    if s[0] == 0.0 or s[-1] <= _RANK_RTOL * s[0]:
        null_vec = np.abs(vt[-1])
        columns = np.flatnonzero(null_vec >= 0.1 * null_vec.max())
        raise CollinearityError(
            f"{what} design is rank deficient; columns {columns.tolist()} "
            "are involved in a near-null direction",
            columns=columns.tolist(),
        )
    return u, s, vt


def _lstsq_from_svd(u, s, vt, rhs):
    return vt.T @ ((u.T @ rhs).T / s).T


def _sandwich(a_mat, b_mat):
    a_inv = np.linalg.inv(a_mat)
    sigma = a_inv @ b_mat @ a_inv.T
    return (sigma + sigma.T) / 2.0


def fit_outcome(w, xhat, y, hc1: bool = False) -> OutcomeFit:
    """Fit Y ~ [W, Xhat] by OLS with a sandwich covariance.

    Parameters
    ----------
    w : array-like, shape (n, p + 2)
        Covariate design [1, T, C].
    xhat : array-like, shape (n, d)
        Estimated latent positions.
    y : array-like, shape (n,)
        Outcomes.
    hc1 : bool
        Apply the n/(n-k) small-sample adjustment to the covariance.

    Returns
    -------
    OutcomeFit
        With ``beta`` ordered (beta_w, beta_x), residuals, and ``sigma_beta``
        estimating the asymptotic covariance of sqrt(n) (beta_hat - beta).

    Raises
    ------
    CollinearityError
        If [W, Xhat] is rank deficient (smallest singular value below 1e-10
        of the largest); offending column indices are named.
    """
    w = linalg.as_matrix(w, "w")
    xhat = linalg.as_matrix(xhat, "xhat")
    if w.shape[0] != xhat.shape[0]:
        raise DimensionError(f"row mismatch: w has {w.shape[0]}, xhat has {xhat.shape[0]}")
    n = w.shape[0]
    y = _as_vector(y, n, "y")
    design = np.hstack([w, xhat])
    k = design.shape[1]
    if n < k:
        raise DimensionError(f"need n >= {k} rows to fit {k} coefficients, got n={n}")

    u, s, vt = _checked_svd(design, "outcome")
    beta = _lstsq_from_svd(u, s, vt, y)
    residuals = y - design @ beta

    a_mat = design.T @ design / n
    b_mat = (design * residuals[:, None] ** 2).T @ design / n
    b_mat = (b_mat + b_mat.T) / 2.0
    sigma = _sandwich(a_mat, b_mat)
    if hc1:
        sigma = sigma * (n / (n - k))

    return OutcomeFit(
        beta=beta,
        residuals=residuals,
        sigma_beta=sigma,
        n=n,
        p=w.shape[1] - 2,
        d=xhat.shape[1],
        a_mat=a_mat,
        b_mat=b_mat,
        w=w,
        xhat=xhat,
        y=y,
    )


def fit_mediator(w, xhat, hc1: bool = False) -> MediatorFit:
    """Fit Xhat ~ W by OLS with a sandwich covariance for vec(Theta).

    ``sigma_theta`` is ((p+2) d, (p+2) d) under column-stacked vectorization
    of Theta: the (j*(p+2) + a)-th position of vec(Theta) is Theta[a, j].
    """
    w = linalg.as_matrix(w, "w")
    xhat = linalg.as_matrix(xhat, "xhat")
    if w.shape[0] != xhat.shape[0]:
        raise DimensionError(f"row mismatch: w has {w.shape[0]}, xhat has {xhat.shape[0]}")
    n, q = w.shape
    d = xhat.shape[1]
    if n < q:
        raise DimensionError(f"need n >= {q} rows to fit {q} coefficients, got n={n}")

    u, s, vt = _checked_svd(w, "mediator")
    theta = _lstsq_from_svd(u, s, vt, xhat)
    residuals = xhat - w @ theta

    wtw_n = w.T @ w / n
    a_mat = np.kron(np.eye(d), wtw_n)
    # Rows of the score matrix are kron(xi_i, W_i); B = score^T score / n.
    score = (residuals[:, :, None] * w[:, None, :]).reshape(n, d * q)
    b_mat = score.T @ score / n
    b_mat = (b_mat + b_mat.T) / 2.0
    a_inv = np.kron(np.eye(d), np.linalg.inv(wtw_n))
    sigma = a_inv @ b_mat @ a_inv.T
    sigma = (sigma + sigma.T) / 2.0
    if hc1:
        sigma = sigma * (n / (n - q))

    return MediatorFit(
        theta=theta,
        residuals=residuals,
        sigma_theta=sigma,
        n=n,
        p=q - 2,
        d=d,
        a_mat=a_mat,
        b_mat=b_mat,
        w=w,
        xhat=xhat,
    )


def fit_outcome_fwl(w, xhat, y) -> np.ndarray:
    """Latent-position outcome coefficients via partitioned regression.

    Computes beta_x = (Xhat^T M Xhat)^{-1} Xhat^T M Y with the annihilator
    M = I - W (W^T W)^{-1} W^T that projects onto the orthogonal complement of
    the column space of W. Serves as an independent cross-check of
    :func:`fit_outcome`.
    """
    w = linalg.as_matrix(w, "w")
    xhat = linalg.as_matrix(xhat, "xhat")
    if w.shape[0] != xhat.shape[0]:
        raise DimensionError(f"row mismatch: w has {w.shape[0]}, xhat has {xhat.shape[0]}")
    n = w.shape[0]
    y = _as_vector(y, n, "y")
    _checked_svd(np.hstack([w, xhat]), "outcome")

    m_xhat = xhat - w @ np.linalg.solve(w.T @ w, w.T @ xhat)
    m_y = y - w @ np.linalg.solve(w.T @ w, w.T @ y)
    return np.linalg.solve(m_xhat.T @ m_xhat, m_xhat.T @ m_y)
