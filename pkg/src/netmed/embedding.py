"""Adjacency spectral embeddings for symmetric, directed, and bipartite networks.

The embedding of a network with adjacency matrix A is built from the rank-d
truncated singular value decomposition A ~ U S V^T. For symmetric networks the
latent-position estimate is U S^{1/2}. For directed or bipartite networks the
left co-embedding U S^{1/2} describes how nodes send edges and the right
co-embedding V S^{1/2} describes how nodes receive them, and their product
reconstructs the best rank-d approximation of A.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import linalg
from .errors import DimensionError, InputError, StateError

__all__ = ["Embedding", "ase", "coembed", "varimax_rotate", "varimax_rotate_pair"]

_SYMMETRY_ATOL = 1e-8


@dataclass(frozen=True, eq=False)
class Embedding:
    """Latent-position estimate for one side of a network.

    Attributes
    ----------
    positions : ndarray, shape (n, d)
        Scaled embedding (singular vectors times sqrt singular values).
    singular_values : ndarray, shape (d,)
        Leading singular values, nonincreasing and nonnegative.
    side : str
        One of ``"symmetric"``, ``"left"``, ``"right"``.
    rotation_applied : str
        ``"none"`` or ``"varimax"``.
    d : int
        Embedding dimension (equals ``positions.shape[1]``).
    """

    positions: np.ndarray
    singular_values: np.ndarray
    side: str
    rotation_applied: str = "none"
    d: int = 0

    def __post_init__(self):
        if self.d == 0:
            object.__setattr__(self, "d", self.positions.shape[1])
        if self.d != self.positions.shape[1]:
            raise DimensionError(
                f"d={self.d} does not match positions with {self.positions.shape[1]} columns"
            )

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def unscaled_vectors(self) -> np.ndarray:
        """Singular vectors with the sqrt-singular-value scaling removed."""
        scale = np.sqrt(self.singular_values)
        safe = np.where(scale > 0.0, scale, 1.0)
        return self.positions / safe


def _check_square_symmetric(a: np.ndarray) -> None:
    if a.shape[0] != a.shape[1]:
        raise InputError(
            f"adjacency matrix is {a.shape[0]}x{a.shape[1]}; "
            "use coembed() for rectangular (bipartite) networks"
        )
    scale = max(float(np.max(np.abs(a))), 1.0)
    if np.max(np.abs(a - a.T)) > _SYMMETRY_ATOL * scale:
        raise InputError(
            "adjacency matrix is asymmetric; use coembed() to obtain "
            "left/right co-embeddings of a directed network"
        )


def ase(a, d: int) -> Embedding:
    """Adjacency spectral embedding of a symmetric network.

    Parameters
    ----------
    a : array-like, shape (n, n)
        Symmetric adjacency matrix.
    d : int
        Embedding dimension, ``1 <= d <= n``.

    Returns
    -------
    Embedding
        Positions ``U S^{1/2}`` from the rank-d truncated SVD of ``a``, with
        ``side="symmetric"``.
    """
    a = linalg.as_matrix(a, "adjacency matrix")
    _check_square_symmetric(a)
    a = (a + a.T) / 2.0
    fac = linalg.truncated_svd(a, d)
    return Embedding(
        positions=fac.u * np.sqrt(fac.s),
        singular_values=fac.s,
        side="symmetric",
    )


def coembed(a, d: int) -> tuple[Embedding, Embedding]:
    """Left and right co-embeddings of a directed or bipartite network.

    Parameters
    ----------
    a : array-like, shape (n, m)
        Rectangular or square asymmetric adjacency matrix.
    d : int
        Embedding dimension, ``1 <= d <= min(n, m)``.

    Returns
    -------
    (Embedding, Embedding)
        Left embedding ``U S^{1/2}`` (rows of ``a``, e.g. edge senders) and
        right embedding ``V S^{1/2}`` (columns of ``a``, e.g. edge receivers).
        Their product ``left @ right.T`` is the best rank-d approximation of
        ``a``.
    """
    a = linalg.as_matrix(a, "adjacency matrix")
    fac = linalg.truncated_svd(a, d)
    scale = np.sqrt(fac.s)
    left = Embedding(positions=fac.u * scale, singular_values=fac.s, side="left")
    right = Embedding(positions=fac.v * scale, singular_values=fac.s, side="right")
    return left, right


def varimax_rotate(e: Embedding) -> Embedding:
    """Varimax-rotate an embedding for interpretability.

    The rotation R is computed from the embedding's unscaled singular vectors
    and applied to the scaled positions. The gram matrix positions @ positions.T
    is unchanged. A d = 1 embedding is returned unmodified.

    If ``e`` is one side of a co-embedding pair, the other side must be rotated
    by the same R to preserve the reconstruction left @ right.T; use
    :func:`varimax_rotate_pair` for that.

    Raises
    ------
    StateError
        If the embedding has already been rotated.
    """
    if e.rotation_applied != "none":
        raise StateError("embedding has already been varimax-rotated")
    if e.d == 1:
        return e
    rotation = linalg.varimax(e.unscaled_vectors())
    return replace(e, positions=e.positions @ rotation, rotation_applied="varimax")


def varimax_rotate_pair(
    left: Embedding, right: Embedding
) -> tuple[Embedding, Embedding]:
    """Rotate a co-embedding pair by one varimax rotation.

    The rotation is computed from the right side's unscaled singular vectors
    (the side describing how nodes or items receive edges) and applied to both
    sides, so that ``left @ right.T`` is preserved exactly.
    """
    if left.rotation_applied != "none" or right.rotation_applied != "none":
        raise StateError("embedding has already been varimax-rotated")
    if left.d != right.d:
        raise DimensionError(f"pair dimensions differ: {left.d} vs {right.d}")
    if left.d == 1:
        return left, right
    rotation = linalg.varimax(right.unscaled_vectors())
    return (
        replace(left, positions=left.positions @ rotation, rotation_applied="varimax"),
        replace(right, positions=right.positions @ rotation, rotation_applied="varimax"),
    )
