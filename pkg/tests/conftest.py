import numpy as np
import pytest

from credcorr.core import ReferencePortfolio, load_fixture


@pytest.fixture
def example5():
    return load_fixture("example5")


def random_portfolio(rng: np.random.Generator, n: int, *, p_range=(0.001, 0.2),
                     unit_lgd: bool = False, ties: bool = False) -> ReferencePortfolio:
    probs = rng.uniform(*p_range, n)
    if ties and n > 2:
        probs[1] = probs[0]
    recoveries = np.zeros(n) if unit_lgd else rng.uniform(0.0, 0.8, n)
    notionals = rng.dirichlet(np.ones(n))
    return ReferencePortfolio.from_arrays(probs, recoveries, notionals)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
