"""netmed: network-mediated causal effects via spectral network regression.

Estimates natural direct and indirect effects when the mediator is a latent
position in a network: spectral embedding of the (possibly weighted, directed,
or bipartite) adjacency matrix, two-stage OLS with heteroskedasticity-robust
covariances, product-of-coefficients causal estimators with delta-method
intervals, and a Monte Carlo harness for coverage and convergence studies.
"""

__version__ = "0.1.0"

from .embedding import Embedding, ase, coembed, varimax_rotate, varimax_rotate_pair
from .errors import (
    CollinearityError,
    DimensionError,
    InputError,
    ModelError,
    NetmedError,
    ParseError,
    RankError,
    StateError,
)
from .graph_models import (
    LatentConfig,
    ScenarioDraw,
    SubGammaNoise,
    latent_from_blocks,
    sample_network,
    simulate_scenario,
)
from .io_formats import CovariateTable, emit_report, load_covariates, load_edgelist
from .linalg import TruncatedSVD, kron, pinv, procrustes, truncated_svd, varimax
from .mediation import (
    EffectEstimate,
    MediationReport,
    SensitivityRow,
    estimate_effects,
    rotation_invariance_check,
    sensitivity_curve,
)
from .regression import MediatorFit, OutcomeFit, fit_mediator, fit_outcome, fit_outcome_fwl
from .simharness import (
    CellStats,
    SimReport,
    SimScenario,
    misspecification_sweep,
    mse_slope,
    parse_scenario,
    run_scenario,
)

__all__ = [
    "__version__",
    "Embedding", "ase", "coembed", "varimax_rotate", "varimax_rotate_pair",
    "NetmedError", "DimensionError", "InputError", "CollinearityError",
    "RankError", "ModelError", "StateError", "ParseError",
    "LatentConfig", "SubGammaNoise", "ScenarioDraw",
    "latent_from_blocks", "sample_network", "simulate_scenario",
    "CovariateTable", "load_edgelist", "load_covariates", "emit_report",
    "TruncatedSVD", "truncated_svd", "pinv", "kron", "procrustes", "varimax",
    "EffectEstimate", "SensitivityRow", "MediationReport",
    "estimate_effects", "sensitivity_curve", "rotation_invariance_check",
    "OutcomeFit", "MediatorFit", "fit_outcome", "fit_mediator", "fit_outcome_fwl",
    "SimScenario", "CellStats", "SimReport",
    "run_scenario", "misspecification_sweep", "mse_slope", "parse_scenario",
]
