import numpy as np
import pytest

from conjlab.models import CoefficientSeq, FiniteDynSystem, SimplexWeights
from conjlab.services.series import geometric_weights


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def two_cycle():
    return FiniteDynSystem.cycle(2)


@pytest.fixture
def identity2():
    return FiniteDynSystem.identity(2)


@pytest.fixture
def geometric_half() -> SimplexWeights:
    return geometric_weights(0.5, 60)


@pytest.fixture
def zeros60() -> CoefficientSeq:
    return CoefficientSeq.zeros(60)


def random_permutation(rng, m: int) -> FiniteDynSystem:
    return FiniteDynSystem(m, tuple(int(i) for i in rng.permutation(m)))
