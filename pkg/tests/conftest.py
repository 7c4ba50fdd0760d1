import numpy as np
import pytest

from loophodge import shapes
from loophodge.helmholtz import HelmholtzContext
from loophodge.subdivision import LimitSurface


@pytest.fixture(scope="session")
def torus64():
    """The 2048-vertex torus (R = 3, r = 1), read as a twice-refined 16 x 8 net."""
    return LimitSurface(shapes.torus(3.0, 1.0, 64, 32))


@pytest.fixture(scope="session")
def torus64_ctx(torus64):
    return HelmholtzContext(torus64)


@pytest.fixture(scope="session")
def torus16():
    return LimitSurface(shapes.torus(3.0, 1.0, 16, 8))


@pytest.fixture(scope="session")
def torus16_ctx(torus16):
    return HelmholtzContext(torus16)


@pytest.fixture(scope="session")
def sphere2():
    """Level-2 octahedral sphere: 66 vertices, valence-4 patches included."""
    return LimitSurface(shapes.sphere(1.0, 2))


@pytest.fixture(scope="session")
def sphere2_ctx(sphere2):
    return HelmholtzContext(sphere2)


@pytest.fixture(scope="session")
def double_torus():
    return LimitSurface.from_mesh(shapes.double_torus(), 1)


@pytest.fixture(scope="session")
def double_torus_ctx(double_torus):
    return HelmholtzContext(double_torus)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def sphere2_problem(sphere2, sphere2_ctx):
    from loophodge.bie import ScatteringProblem

    return ScatteringProblem(sphere2, 1.0, context=sphere2_ctx)


@pytest.fixture(scope="session")
def torus16_problem(torus16, torus16_ctx):
    """Electrically moderate torus: lambda = 4 m against outer diameter 8 m."""
    from loophodge.bie import ScatteringProblem

    return ScatteringProblem(torus16, 2 * np.pi / 4.0, context=torus16_ctx)
