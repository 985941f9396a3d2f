import numpy as np
import pytest

from apps.geometry.models import ElementCategory, MapElement, NormalizationFrame


@pytest.fixture
def frame():
    return NormalizationFrame.square(60.0)


@pytest.fixture
def l_shape():
    """Открытая ломаная длиной 7 м: 4 по x, 3 по y."""
    return MapElement(ElementCategory.LANE_DIVIDER, [(0, 0), (4, 0), (4, 3)])


@pytest.fixture
def unit_square():
    return MapElement(ElementCategory.CROSSWALK, [(0, 0), (1, 0), (1, 1), (0, 1)], closed=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
