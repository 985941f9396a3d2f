import numpy as np
import pytest

from apps.geometry.models import NormalizationFrame


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture
def frame():
    return NormalizationFrame.square(60.0)
