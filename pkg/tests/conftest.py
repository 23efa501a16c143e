import numpy as np
import pytest

from knucklesim import CraneParams, forward_dynamics
from knucklesim.validation import sample_state


@pytest.fixture(scope="session")
def params():
    """Crane parameters used by the reference experiments."""
    return CraneParams()


@pytest.fixture(scope="session", autouse=True)
def warm_kernels(params):
    """Trigger JIT compilation once so timed tests measure computation only."""
    q, qd = sample_state(np.random.default_rng(0))
    forward_dynamics(q, qd, np.zeros(4), params)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
