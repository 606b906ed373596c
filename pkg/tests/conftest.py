import numpy as np
import pytest

from randrat.sphere import standard_net


@pytest.fixture(scope="session")
def net10k():
    return standard_net(10_000)


@pytest.fixture(scope="session")
def net4k():
    return standard_net(4_000)


@pytest.fixture(scope="session")
def net1k():
    return standard_net(1_000)


@pytest.fixture()
def rng():
    return np.random.default_rng(0xC0FFEE)
