import numpy as np
import pytest

from lrlab import models
from lrlab.lattice import SiteSet
from lrlab.quantum import LocalOperator


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def path5():
    return SiteSet.path(5)


@pytest.fixture
def ising5(path5):
    return models.ising(path5, J=1.0)


def random_hermitian(rng, dim):
    M = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (M + M.conj().T)


def random_operator(rng, sites, dim=2, hermitian=True):
    size = dim ** len(sites)
    if hermitian:
        M = random_hermitian(rng, size)
    else:
        M = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    return LocalOperator.on(sites, M, dim)
