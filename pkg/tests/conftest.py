import itertools

import numpy as np
import pytest

from steercert import Scenario


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def classical_scenario(N, d):
    """Each Bob holds commuting diagonal observables indexed by (b0, b1).

    The realized functional is block diagonal over deterministic strategies,
    so its top eigenvalue is the LHS value.
    """
    w = np.exp(2j * np.pi / d)
    grid = list(itertools.product(range(d), repeat=2))
    b0 = np.diag([w ** a for a, _ in grid])
    b1 = np.diag([w ** b for _, b in grid])
    return Scenario(N, d, tuple((b0, b1) for _ in range(N - 1)))
