"""Seeded samplers for low-rank network models and the simulation scenarios.

Networks are generated conditionally on latent positions X: the expected
adjacency matrix is P = X X^T and edges are independent given X, with
Bernoulli, Gaussian, or degenerate (noise-free) entry distributions. Latent
positions themselves come from a degree-corrected stochastic blockmodel
parameterized by block memberships Z, a positive semi-definite mixing matrix
B, and per-node degree parameters gamma.

All samplers take an explicit seed (anything accepted by
``numpy.random.default_rng``); there is no global RNG state, so replicates
seeded as ``(master_seed, replicate_index)`` are order-independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DimensionError, InputError, ModelError, RankError

__all__ = [
    "LatentConfig",
    "SubGammaNoise",
    "ScenarioDraw",
    "latent_from_blocks",
    "sample_network",
    "simulate_scenario",
]

_NOISE_FAMILIES = ("bernoulli", "gaussian", "none")
_MODELS = ("informative", "uninformative")
_NULL_MODES = ("none", "zero_nde", "zero_nie")


@dataclass(frozen=True, eq=False)
class LatentConfig:
    """Degree-corrected blockmodel parameters (Z, B, gamma).

    ``z`` is an (n, d) nonnegative membership matrix with exactly one nonzero
    entry per row (basic DC-SBM), ``b`` a (d, d) symmetric PSD mixing matrix,
    and ``gamma`` a strictly positive length-n degree-heterogeneity vector.
    ``seed`` records how the configuration was sampled (provenance only).
    """

    n: int
    d: int
    z: np.ndarray
    b: np.ndarray
    gamma: np.ndarray
    seed: object = None

    def __post_init__(self):
        z = linalg.as_matrix(self.z, "z")
        b = linalg.as_matrix(self.b, "b")
        gamma = np.asarray(self.gamma, dtype=np.float64)
        if z.shape != (self.n, self.d):
            raise DimensionError(f"z has shape {z.shape}, expected ({self.n}, {self.d})")
        if b.shape != (self.d, self.d):
            raise DimensionError(f"b has shape {b.shape}, expected ({self.d}, {self.d})")
        if gamma.shape != (self.n,):
            raise DimensionError(f"gamma has shape {gamma.shape}, expected ({self.n},)")
        if np.any(z < 0) or np.any(np.count_nonzero(z, axis=1) != 1):
            raise InputError("each row of z must have exactly one nonzero, nonnegative entry")
        scale = max(float(np.max(np.abs(b))), 1.0)
        if np.max(np.abs(b - b.T)) > 1e-10 * scale:
            raise InputError("b must be symmetric")
        if np.min(np.linalg.eigvalsh((b + b.T) / 2.0)) < -1e-10 * scale:
            raise InputError("b must be positive semi-definite")
        if not np.all(np.isfinite(gamma)) or np.any(gamma <= 0):
            raise InputError("gamma must be finite and strictly positive")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "gamma", gamma)


@dataclass(frozen=True)
class SubGammaNoise:
    """Edge-noise family for :func:`sample_network`.

    ``family`` selects the conditional edge distribution: ``"bernoulli"``
    (binary edges with success probability P_ij), ``"gaussian"`` (A = P + E
    with E_ij ~ N(0, nu)), or ``"none"`` (A = P exactly). ``nu`` and ``b`` are
    the sub-gamma tail parameters; ``b`` is unused by the families implemented
    here but kept so configurations round-trip.
    """

    family: str = "bernoulli"
    nu: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if self.family not in _NOISE_FAMILIES:
            raise InputError(f"unknown noise family {self.family!r}; expected one of {_NOISE_FAMILIES}")
        if not (np.isfinite(self.nu) and self.nu >= 0):
            raise InputError("nu must be finite and nonnegative")
        if not (np.isfinite(self.b) and self.b >= 0):
            raise InputError("b must be finite and nonnegative")


@dataclass(frozen=True, eq=False)
class ScenarioDraw:
    """One complete simulation draw: network, covariates, outcome, and truths.

    ``w`` is the design matrix [1, T, C] with the treatment in column 1.
    ``theta_true`` is the realized-sample projection of the latent positions
    on ``w``, and ``nde_true`` / ``nie_true`` are the per-draw true effects
    for the unit contrast (t, t*) = (1, 0).
    """

    a: np.ndarray
    x: np.ndarray
    w: np.ndarray
    y: np.ndarray
    theta_true: np.ndarray
    beta_true: np.ndarray
    nde_true: float
    nie_true: float
    model: str = "informative"
    labels: np.ndarray = field(default=None, repr=False)
    gamma: np.ndarray = field(default=None, repr=False)
    treatment_index: int = 1

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]


def latent_from_blocks(cfg: LatentConfig) -> np.ndarray:
    """Latent positions X with X X^T = diag(gamma) Z B Z^T diag(gamma).

    X is the scaled singular-vector factor U S^{1/2} of the rank-d truncated
    SVD of P = diag(gamma) Z B Z^T diag(gamma), computed through the
    equivalent d x d eigenproblem (G^{1/2} B G^{1/2} with G the gram matrix of
    diag(gamma) Z), which avoids forming the n x n matrix P.

    Raises
    ------
    RankError
        If P has rank below d (e.g. an empty block or singular B).
    """
    c = cfg.z * cfg.gamma[:, None]
    gram = c.T @ c
    gram = (gram + gram.T) / 2.0

    gram_vals, gram_vecs = np.linalg.eigh(gram)
    if gram_vals[0] <= 1e-12 * max(gram_vals[-1], 1e-300):
        raise RankError(
            "diag(gamma) @ z is column rank deficient (empty block?); P has rank < d"
        )
    root = gram_vecs @ np.diag(np.sqrt(gram_vals)) @ gram_vecs.T
    root_inv = gram_vecs @ np.diag(1.0 / np.sqrt(gram_vals)) @ gram_vecs.T

    core = root @ cfg.b @ root
    core = (core + core.T) / 2.0
    core_vals, core_vecs = np.linalg.eigh(core)
    order = np.argsort(-core_vals, kind="stable")
    core_vals = core_vals[order]
    core_vecs = core_vecs[:, order]
    if core_vals[-1] <= 1e-10 * max(core_vals[0], 1e-300):
        raise RankError("P = diag(gamma) Z B Z^T diag(gamma) has rank < d")

    u = c @ root_inv @ core_vecs
    # Same deterministic sign convention as the dense decomposition path.
    for k in range(u.shape[1]):
        i = int(np.argmax(np.abs(u[:, k])))
        if u[i, k] < 0:
            u[:, k] = -u[:, k]
    return u * np.sqrt(core_vals)


def sample_network(x, noise: SubGammaNoise, seed, max_clip: float = 1e-8) -> np.ndarray:
    """Sample a symmetric adjacency matrix with E[A | X] = X X^T.

    Entries on and above the diagonal are drawn independently given X and
    mirrored. For the Bernoulli family, probabilities X_i X_j^T may fall
    outside [0, 1] by at most ``max_clip`` (they are clipped); larger
    violations raise :class:`ModelError`. Pass ``max_clip=numpy.inf`` for the
    plain-clipping policy.
    """
    x = linalg.as_matrix(x, "x")
    rng = np.random.default_rng(seed)
    p = x @ x.T
    p = (p + p.T) / 2.0
    n = p.shape[0]

    if noise.family == "none":
        return p

    iu = np.triu_indices(n)
    if noise.family == "bernoulli":
        low = float(np.min(p))
        high = float(np.max(p))
        if low < -max_clip or high > 1.0 + max_clip:
            raise ModelError(
                f"edge probabilities outside [0, 1]: range [{low:.6g}, {high:.6g}] "
                f"exceeds clip tolerance {max_clip:.3g}"
            )
        probs = np.clip(p[iu], 0.0, 1.0)
        upper = (rng.random(probs.shape[0]) < probs).astype(np.float64)
    else:  # gaussian
        upper = p[iu] + rng.normal(0.0, np.sqrt(noise.nu), iu[0].shape[0])

    a = np.zeros((n, n))
    a[iu] = upper
    a = a + np.triu(a, 1).T
    return a


def _blockmodel_config(n: int, d: int, rng, prob_policy: str):
    labels = rng.integers(0, d, size=n)
    z = np.zeros((n, d))
    z[np.arange(n), labels] = 1.0
    gamma = rng.uniform(1.0, 3.0, size=n)
    if prob_policy == "rescale":
        gamma = gamma / gamma.max()
    b = np.full((d, d), 0.03)
    np.fill_diagonal(b, 0.8)
    return labels, z, b, gamma


def simulate_scenario(
    model: str,
    n: int,
    d: int,
    seed,
    null_mode: str = "none",
    prob_policy: str = "rescale",
) -> ScenarioDraw:
    """Draw one complete scenario from the simulation protocol.

    The network is a degree-corrected SBM with ``d`` equally likely blocks,
    degree parameters uniform on [1, 3], and a mixing matrix with 0.8 on the
    diagonal and 0.03 off it. Under ``model="informative"`` the covariates are
    dummy-coded block indicators (treatment = second-block indicator, other
    indicators as controls); under ``model="uninformative"`` they are three
    independent standard normal columns (first = treatment). Mediator
    coefficients are the realized-sample least-squares projection of the
    latent positions on the design, outcome coefficients are N(1, 1/4) draws,
    and outcome errors are unscaled t_5.

    Parameters
    ----------
    model : {"informative", "uninformative"}
    n, d : int
        Nodes and blocks (= latent dimension); requires ``n >= 8 d``, ``d >= 2``.
    seed : int, sequence of int, or numpy Generator
    null_mode : {"none", "zero_nde", "zero_nie"}
        Force the treatment outcome coefficient (zero_nde) or the latent
        outcome coefficients (zero_nie) to zero.
    prob_policy : {"rescale", "clip"}
        How out-of-range Bernoulli probabilities are avoided: rescale gamma by
        1 / max(gamma) (default, preserves relative degree heterogeneity) or
        clip probabilities at [0, 1].
    """
    if model not in _MODELS:
        raise InputError(f"unknown model {model!r}; expected one of {_MODELS}")
    if null_mode not in _NULL_MODES:
        raise InputError(f"unknown null_mode {null_mode!r}; expected one of {_NULL_MODES}")
    if prob_policy not in ("rescale", "clip"):
        raise InputError(f"unknown prob_policy {prob_policy!r}")
    if d < 2:
        raise DimensionError(f"d must be >= 2, got {d}")
    if n < 8 * d:
        raise DimensionError(f"n must be >= 8 d, got n={n}, d={d}")

    rng = np.random.default_rng(seed)
    labels, z, b, gamma = _blockmodel_config(n, d, rng, prob_policy)
    cfg = LatentConfig(n=n, d=d, z=z, b=b, gamma=gamma, seed=None)
    x = latent_from_blocks(cfg)
    max_clip = np.inf if prob_policy == "clip" else 1e-8
    a = sample_network(x, SubGammaNoise("bernoulli"), rng, max_clip=max_clip)

    if model == "informative":
        w = np.column_stack([np.ones(n)] + [(labels == k).astype(np.float64) for k in range(1, d)])
    else:
        w = np.column_stack([np.ones(n), rng.standard_normal((n, 3))])
    q = w.shape[1]

    theta_true, *_ = np.linalg.lstsq(w, x, rcond=None)

    beta = rng.normal(1.0, 0.5, size=q + d)
    if null_mode == "zero_nde":
        beta[1] = 0.0
    elif null_mode == "zero_nie":
        beta[q:] = 0.0

    eps = rng.standard_t(5, size=n)
    y = w @ beta[:q] + x @ beta[q:] + eps

    nde_true = float(beta[1])
    nie_true = float(theta_true[1] @ beta[q:])

    return ScenarioDraw(
        a=a,
        x=x,
        w=w,
        y=y,
        theta_true=theta_true,
        beta_true=beta,
        nde_true=nde_true,
        nie_true=nie_true,
        model=model,
        labels=labels,
        gamma=gamma,
    )
