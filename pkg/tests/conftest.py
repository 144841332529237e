import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from acoustic_hum import grid as g
from acoustic_hum.coefficients import MediumCoefficients

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# the 1D two-layer compatible medium used throughout
TWO_LAYER = MediumCoefficients((1.0, 1.0), (1.0, 4.0), (2.0, 2.0), (0.5, 2.0))


def bump(x, c, r):
    s = (x - c) / r
    return np.where(np.abs(s) < 1, (1 - np.minimum(s * s, 1)) ** 4, 0.0)


def interval(n, bounds=(0.0, 1.0)):
    return g.build_layered_grid(g.GeometrySpec(1, bounds, (bounds[-1] - bounds[0]) / n))


@pytest.fixture
def two_layer():
    return TWO_LAYER


@pytest.fixture
def two_layer_grid():
    return interval(400, (0.0, 0.5, 1.0))
