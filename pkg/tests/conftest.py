import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_series(rng, t, h, w):
    return rng.normal(size=(t, h, w)) + 1j * rng.normal(size=(t, h, w))
