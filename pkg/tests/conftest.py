import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def log_uniform(rng, size, low=0.1, high=10.0):
    return np.exp(rng.uniform(np.log(low), np.log(high), size))
