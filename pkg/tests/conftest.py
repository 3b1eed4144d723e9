import numpy as np
import pytest

from midas_svar.layout import FrequencyLayout


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_layout():
    return FrequencyLayout(n_low=1, n_high=1, m=3)


@pytest.fixture
def empirical_layout():
    return FrequencyLayout(n_low=1, n_high=2, m=3, high_names=("i", "vix"), low_names=("k",))


def random_spd(rng, n, scale=1.0):
    M = rng.standard_normal((n, n))
    return scale * (M @ M.T / n + 0.5 * np.eye(n))


def random_stable(rng, n, radius=0.8):
    A = rng.standard_normal((n, n))
    rho = np.abs(np.linalg.eigvals(A)).max()
    return A * (radius / rho)
