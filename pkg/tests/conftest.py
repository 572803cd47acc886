import numpy as np
import pytest

from chaoscope.core import OneBodyGenerator, PairKernel


@pytest.fixture
def uniform2():
    return PairKernel.uniform(2, beta=1.0)


@pytest.fixture
def swap2():
    return PairKernel.swap(2, beta=1.0)


@pytest.fixture
def uniform3():
    return PairKernel.uniform(3, beta=1.0)


@pytest.fixture
def k0_zero():
    return OneBodyGenerator.zero(2)


def random_prob_vector(rng, S):
    v = rng.random(S) + 0.05
    return v / v.sum()


def random_symmetric_tensor(rng, S, j, normalize=False):
    from chaoscope.core import symmetrize

    A = symmetrize(rng.standard_normal((S,) * j))
    if normalize:
        A = np.abs(A)
        A = A / A.sum()
    return A


def random_kernel(rng, S, beta=1.0):
    """Random admissible weighted kernel (nonnegative, exchange symmetric)."""
    lam = rng.random((S, S, S, S))
    lam = 0.5 * (lam + lam.transpose(1, 0, 3, 2))
    return PairKernel.weighted(S, beta * lam)
