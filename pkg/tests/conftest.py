import numpy as np
import pytest

from clonecalc import core


@pytest.fixture
def mod6():
    return core.modulus_for(6)


@pytest.fixture
def mod30():
    return core.modulus_for(30)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_table(rng, modulus, arity):
    dom = core.domain(modulus.primes, arity)
    vals = np.stack(
        [rng.integers(0, p, size=dom.npoints, dtype=np.uint8) for p in modulus.primes],
        axis=1,
    )
    return core.FnTable(modulus, arity, vals)
