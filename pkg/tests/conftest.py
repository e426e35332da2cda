import numpy as np
import pytest

from bifurcata.nonlinearity import GKernel, Nonlinearity
from bifurcata.quadrature import PhaseIntegrator
from bifurcata.shooting import ShootingContext

# z tan z = 1 roots for a = 1, computed independently at 30 digits
Z1 = 0.86033358901937976248
Z2 = 3.42561845948172814648


@pytest.fixture(scope="session")
def cubic():
    return Nonlinearity("cubic")


@pytest.fixture(scope="session")
def sine():
    return Nonlinearity("sine")


@pytest.fixture(scope="session")
def gk(cubic):
    return GKernel(cubic)


@pytest.fixture(scope="session")
def pi(gk):
    return PhaseIntegrator(gk)


@pytest.fixture(scope="session")
def sc(gk, pi):
    return ShootingContext(gk, pi, a=1.0)


@pytest.fixture(scope="session")
def sc_sine(sine):
    return ShootingContext(GKernel(sine), a=1.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(7)
