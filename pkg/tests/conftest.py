import math

import pytest

from wobble.terrain import Extent, GridTerrain, flat_terrain, generate_terrain

EXTENT = Extent(-8.0, 8.0, -8.0, 8.0)


@pytest.fixture(scope="session")
def ext():
    return EXTENT


@pytest.fixture(scope="session")
def flat():
    return flat_terrain(EXTENT)


@pytest.fixture(scope="session")
def plane10():
    slope = math.tan(math.radians(10.0))
    return GridTerrain.from_function(lambda x, y: x * slope, EXTENT, 0.5)


@pytest.fixture(scope="session")
def hills14():
    return generate_terrain(1, math.radians(14.0), 20, EXTENT)


@pytest.fixture(scope="session")
def hills12():
    return generate_terrain(3, math.radians(12.0), 20, EXTENT)


@pytest.fixture(scope="session")
def hills30():
    return generate_terrain(5, math.radians(30.0), 20, EXTENT)
