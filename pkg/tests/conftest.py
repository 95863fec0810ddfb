import numpy as np
import pytest

from omqsd import SystemParams


@pytest.fixture
def p44():
    return SystemParams(dim_c=4, dim_m=4)


@pytest.fixture
def p66():
    return SystemParams(dim_c=6, dim_m=6)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def rel_l2(x, y):
    x = np.asarray(x)
    y = np.asarray(y)
    return np.linalg.norm(x - y) / max(np.linalg.norm(x), 1e-300)
