import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


def random_spd(rng, n, shift=1.0):
    G = rng.standard_normal((n, n))
    return G @ G.T + shift * np.eye(n)


def spd_inv_sqrt(H):
    """Eigendecomposition-based H^{-1/2}: independent of the Cholesky path."""
    lam, Q = np.linalg.eigh((H + H.T) / 2.0)
    return Q @ np.diag(lam ** -0.5) @ Q.T


def spd_sqrt(H):
    lam, Q = np.linalg.eigh((H + H.T) / 2.0)
    return Q @ np.diag(lam ** 0.5) @ Q.T
