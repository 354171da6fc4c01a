import numpy as np
import pytest

import potkit as pk


@pytest.fixture(scope="session")
def unit_sphere_5000():
    """The 5000-panel unit-sphere mesh shared by the acceptance criteria."""
    return pk.panelize(pk.Ball([0, 0, 0], 1.0), 50)


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
