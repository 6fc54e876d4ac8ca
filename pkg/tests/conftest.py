import math

import numpy as np
import pytest

from quatsmc import bracket, quat, synth

X0 = 0.05 * (quat.ONE + quat.I) / math.sqrt(2.0)


def make_plant(spec=None, s0=None, **kw):
    args = dict(bracket=spec or bracket.test_bracket(), B=quat.ONE, C=quat.ONE, K=0.1 * quat.ONE,
                x0=X0, s0=np.zeros(4) if s0 is None else s0, eta0=0.01, margin=0.05, alpha_s=1.0)
    args.update(kw)
    return synth.PlantConfig(**args)


@pytest.fixture(scope="session")
def table_constants():
    return bracket.constants_from_values(0.2, 0.0, 0.00665, 0.5)


@pytest.fixture(scope="session")
def plant():
    return make_plant()


@pytest.fixture(scope="session")
def synthesis(plant, table_constants):
    return synth.algorithm1(plant, table_constants)


@pytest.fixture(scope="session")
def reaching_plant():
    return make_plant(s0=0.01 * quat.I)


@pytest.fixture(scope="session")
def reaching_synthesis(reaching_plant, table_constants):
    return synth.algorithm1(reaching_plant, table_constants)
