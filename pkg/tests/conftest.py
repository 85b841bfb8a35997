import numpy as np
import pytest
from hypothesis import settings

# numba compiles on first call, which can blow through per-example deadlines
settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
