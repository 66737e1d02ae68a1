import numpy as np
import pytest
from hypothesis import settings

from gktop.critical_set import SubsystemNConstants, SubsystemOConstants
from gktop.rigid_core import BodyParams

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

# body used throughout: a = 1, b = 0.4
REF_PARAMS = BodyParams(1.0, 0.4)
REF_O = SubsystemOConstants(-0.6, 1.2)
N_CONST = SubsystemNConstants(0.5, 2.2)


@pytest.fixture
def rng():
    return np.random.default_rng(20241019)


@pytest.fixture
def params():
    return REF_PARAMS
