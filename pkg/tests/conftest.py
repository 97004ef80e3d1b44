import numpy as np
import pytest
from hypothesis import strategies as st

from cdregion.prob import Alphabet, JointDistribution


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_joint(rng, sizes, names=None, concentration=1.0):
    names = names or [f"X{i}" for i in range(len(sizes))]
    p = rng.dirichlet(np.full(int(np.prod(sizes)), concentration)).reshape(sizes)
    return JointDistribution([Alphabet(n, s) for n, s in zip(names, sizes)], p)


@st.composite
def joints(draw, min_vars=2, max_vars=4, max_size=3):
    k = draw(st.integers(min_vars, max_vars))
    sizes = draw(st.lists(st.integers(1, max_size), min_size=k, max_size=k))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    sparse = draw(st.booleans())
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(int(np.prod(sizes))))
    if sparse and p.size > 1:
        p[rng.random(p.size) < 0.3] = 0.0
        if p.sum() == 0:
            p[0] = 1.0
        p /= p.sum()
    return JointDistribution([Alphabet(f"X{i}", s) for i, s in enumerate(sizes)], p.reshape(sizes))
