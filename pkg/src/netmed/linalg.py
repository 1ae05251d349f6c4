"""Dense linear-algebra kernels shared by the rest of the package.

All matrices are plain numpy ``float64`` 2-D arrays. Every function here is a
pure function of its inputs and deterministic for a fixed input: singular
vectors follow a fixed sign convention (the entry of largest magnitude in each
column of U is made nonnegative, with the paired V column flipped alongside so
that U S V^T is unchanged).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DimensionError, InputError

__all__ = [
    "TruncatedSVD",
    "truncated_svd",
    "pinv",
    "kron",
    "procrustes",
    "varimax",
    "varimax_criterion",
]


class TruncatedSVD(NamedTuple):
    """Rank-d factorization A ~ u @ diag(s) @ v.T with orthonormal u, v."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a float64 2-D array, rejecting empty or non-finite input."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise InputError(f"{name} must be 2-dimensional, got ndim={a.ndim}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise InputError(f"{name} must have at least one row and column, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{name} contains non-finite entries")
    return a


def _apply_sign_convention(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flip paired columns of (u, v) so each u column's largest-|.| entry is >= 0."""
    u = u.copy()
    v = v.copy()
    for k in range(u.shape[1]):
        i = int(np.argmax(np.abs(u[:, k])))
        if u[i, k] < 0:
            u[:, k] = -u[:, k]
            v[:, k] = -v[:, k]
    return u, v


def _is_symmetric(a: np.ndarray) -> bool:
    if a.shape[0] != a.shape[1]:
        return False
    scale = np.max(np.abs(a))
    if scale == 0.0:
        return True
    return bool(np.all(np.abs(a - a.T) <= 1e-12 * scale))


def truncated_svd(a, d: int) -> TruncatedSVD:
    """Best rank-``d`` factorization of a dense matrix.

    Parameters
    ----------
    a : array-like, shape (n, m)
        Matrix to factor. Must be finite.
    d : int
        Number of leading singular triplets to keep, ``1 <= d <= min(n, m)``.

    Returns
    -------
    TruncatedSVD
        ``u`` (n, d) and ``v`` (m, d) with orthonormal columns and ``s`` the
        ``d`` leading singular values in nonincreasing order, such that
        ``u @ np.diag(s) @ v.T`` is the best rank-d approximation of ``a`` in
        Frobenius norm.

    Raises
    ------
    DimensionError
        If ``d`` is out of range.
    InputError
        If ``a`` has non-finite entries.

    Notes
    -----
    Square symmetric inputs take a symmetric-eigendecomposition path (singular
    values are the absolute eigenvalues, ordered decreasingly); other inputs
    use LAPACK SVD. Both paths are deterministic for a fixed input.
    """
    a = as_matrix(a, "a")
    n, m = a.shape
    if not 1 <= d <= min(n, m):
        raise DimensionError(f"d={d} out of range for a {n}x{m} matrix")

    if _is_symmetric(a):
        sym = (a + a.T) / 2.0
        eigvals, eigvecs = np.linalg.eigh(sym)
        order = np.argsort(-np.abs(eigvals), kind="stable")[:d]
        s = np.abs(eigvals[order])
        u = eigvecs[:, order]
        v = u * np.sign(eigvals[order] + (eigvals[order] == 0.0))
    else:
        full_u, full_s, full_vt = np.linalg.svd(a, full_matrices=False)
        u = full_u[:, :d]
        s = full_s[:d]
        v = full_vt[:d].T

    u, v = _apply_sign_convention(u, v)
    return TruncatedSVD(u=u, s=np.ascontiguousarray(s), v=v)


def pinv(a, tol: float = 1e-12) -> np.ndarray:
    """Moore-Penrose pseudoinverse with singular values below ``tol * s_max`` zeroed."""
    a = as_matrix(a, "a")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[1], a.shape[0]))
    cutoff = tol * s[0]
    s_inv = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    return (vt.T * s_inv) @ u.T


def kron(a, b) -> np.ndarray:
    """Kronecker product: (a kron b)[i*p + k, j*q + l] = a[i, j] * b[k, l]."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    return np.kron(a, b)


def procrustes(source, target) -> np.ndarray:
    """Orthogonal matrix Q minimizing ||source @ Q - target||_F.

    Parameters
    ----------
    source, target : array-like, shape (n, d)
        Point configurations with matching shapes. No centering or scaling is
        applied; the solution is Q = U V^T from the SVD of source^T target.

    Returns
    -------
    ndarray, shape (d, d)
        An orthogonal minimizer. When source^T target is rank deficient the
        minimizer is non-unique; a valid orthogonal matrix is still returned.
    """
    source = as_matrix(source, "source")
    target = as_matrix(target, "target")
    if source.shape != target.shape:
        raise DimensionError(
            f"shape mismatch: source {source.shape} vs target {target.shape}"
        )
    u, _, vt = np.linalg.svd(source.T @ target)
    return u @ vt


def varimax_criterion(loadings) -> float:
    """Varimax objective: sum over columns of the variance of squared loadings."""
    loadings = as_matrix(loadings, "loadings")
    sq = loadings**2
    return float(np.sum(np.mean(sq**2, axis=0) - np.mean(sq, axis=0) ** 2))


def varimax(
    v,
    max_iter: int = 500,
    tol: float = 1e-10,
    kaiser_normalize: bool = False,
) -> np.ndarray:
    """Orthogonal rotation R maximizing the varimax criterion of ``v @ R``.

    Parameters
    ----------
    v : array-like, shape (n, d)
        Loading matrix to rotate.
    max_iter : int
        Maximum number of SVD update iterations, >= 1.
    tol : float
        Stop once the criterion gain of an iteration falls below ``tol``.
    kaiser_normalize : bool
        Row-normalize loadings before rotation (Kaiser normalization). Off by
        default.

    Returns
    -------
    ndarray, shape (d, d)
        Orthogonal rotation at a local maximum of the criterion. For d = 1 the
        criterion is degenerate and ``[[1.0]]`` is returned. Columns of
        ``v @ R`` follow the package sign convention.
    """
    v = as_matrix(v, "v")
    if max_iter < 1:
        raise DimensionError(f"max_iter must be >= 1, got {max_iter}")
    n, d = v.shape
    if d == 1:
        return np.ones((1, 1))

    if kaiser_normalize:
        norms = np.sqrt(np.sum(v**2, axis=1, keepdims=True))
        norms[norms == 0.0] = 1.0
        v = v / norms

    rotation = np.eye(d)
    best_rotation = rotation
    best_value = varimax_criterion(v)
    for _ in range(max_iter):
        rotated = v @ rotation
        # Gradient of the criterion wrt the rotation, projected back to the
        # orthogonal group via the SVD (Lawley-Maxwell update).
        grad = v.T @ (rotated**3 - rotated @ np.diag(np.mean(rotated**2, axis=0)))
        u, _, wt = np.linalg.svd(grad)
        rotation = u @ wt
        value = varimax_criterion(v @ rotation)
        gain = value - best_value
        if value > best_value:
            best_value = value
            best_rotation = rotation
        if gain < tol:
            break
    rotation = best_rotation.copy()

    # Deterministic sign: largest-|.| entry of each rotated column nonnegative.
    rotated = v @ rotation
    for k in range(d):
        i = int(np.argmax(np.abs(rotated[:, k])))
        if rotated[i, k] < 0:
            rotation[:, k] = -rotation[:, k]
    return rotation
