import numpy as np
import pytest

from pmcmc.models.lgss import make_lgss, simulate_lgss
from pmcmc.models.poisson import make_poisson_model


class GenericView:
    """Hide a model's compiled fast paths; everything else delegates.

    Forces the reference (vectorized numpy) filter and smoother paths so
    tests can compare them against the compiled kernels.
    """

    def __init__(self, inner):
        self._inner = inner

    def __getattr__(self, name):
        return getattr(self._inner, name)

    def filter_loop(self, variant):
        return None

    def smoother_terms(self):
        return None


def rel_err(a, b):
    """Mixed absolute/relative discrepancy, safe near zero."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.max(np.abs(a - b) / np.maximum(1.0, np.maximum(np.abs(a), np.abs(b))))


@pytest.fixture(scope="session")
def lgss_model():
    return make_lgss(sigma_e=0.1)


@pytest.fixture(scope="session")
def lgss_rescaled():
    return make_lgss(sigma_e=0.1, rescale=True)


@pytest.fixture(scope="session")
def poisson_model():
    return make_poisson_model()


@pytest.fixture(scope="session")
def lgss_data(lgss_model):
    """A fixed simulated record of length 60 at the reference parameters."""
    rng = np.random.default_rng(161)
    theta = np.array([0.5, 1.0])
    states, observations = simulate_lgss(lgss_model, theta, 60, rng)
    return theta, states, observations
