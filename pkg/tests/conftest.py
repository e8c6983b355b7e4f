import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qig.mpemba import MpembaScenario, run_experiment

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def scenario():
    return MpembaScenario()


@pytest.fixture(scope="session")
def bundle(scenario):
    """The qubit relaxation experiment at the default parameters (shared by many tests)."""
    return run_experiment(scenario)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
