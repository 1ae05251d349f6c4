import numpy as np
import pytest


def rand_orthogonal(rng, d):
    """Haar-distributed random orthogonal matrix."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
