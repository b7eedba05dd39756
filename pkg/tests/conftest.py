import numpy as np
import pytest

from padicft import KernelSpec, Lattice, ModelParams, PrimeConfig
from padicft.gibbs import FreeMeasure

# (p, N, l) lattices with at most 1000 points
SMALL_GRID = [(3, 1, 1), (3, 1, 2), (3, 2, 1), (5, 1, 1), (5, 1, 2), (5, 2, 1)]


@pytest.fixture(scope="session")
def lattices():
    cache = {}

    def get(p, N, l):
        key = (p, N, l)
        if key not in cache:
            cache[key] = Lattice(PrimeConfig(p, N, l))
        return cache[key]

    return get


@pytest.fixture(scope="session")
def ref_measure(lattices):
    """p=3, N=1, l=1, delta=2, gamma=2, alpha2=2: the hand-checked configuration."""
    return FreeMeasure(lattices(3, 1, 1), ModelParams(2.0, 2.0, KernelSpec(2.0, 1)))


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)
