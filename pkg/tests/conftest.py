import numpy as np
import pytest

from rdquant.grid import PopulationProfile


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def two_spikes():
    return PopulationProfile([0, 0, 0, 10, 0, 0, 0, 10])


def random_profiles(seed, count, n_range=(4, 16), zero_prob=0.0):
    """Yield ``count`` random small profiles with i.i.d. uniform masses."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        z = rng.uniform(0, 1, n)
        if zero_prob:
            z[rng.random(n) < zero_prob] = 0.0
        if not z.any():
            z[0] = 1.0
        yield PopulationProfile(z)
