import numpy as np
import pytest

from rwrslab.sampling import SeedSpec, StableParams
from rwrslab.scenery import IidStable, Scenery


class FixedScenery(Scenery):
    """Scenery with hand-picked values on a few sites and zero elsewhere."""

    def __init__(self, values: dict, spec=None):
        super().__init__(spec or IidStable(StableParams(2.0)), SeedSpec(0))
        self.fixed = dict(values)

    def values(self, lo, hi):
        return np.array([float(self.fixed.get(x, 0.0)) for x in range(int(lo), int(hi) + 1)])


@pytest.fixture
def fixed_scenery():
    return FixedScenery
