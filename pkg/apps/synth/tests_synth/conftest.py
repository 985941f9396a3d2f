import pytest

from apps.synth.models import NoiseConfig, SceneConfig


@pytest.fixture
def scene_config():
    return SceneConfig(seed=7)


@pytest.fixture
def three_lanes_only():
    """Ровно 3 разделителя, без стоп-линий и переходов."""
    return SceneConfig(lanes=(3, 3), stop_line_prob=0.0, crosswalk_prob=0.0, seed=3)


@pytest.fixture
def zero_noise():
    return NoiseConfig.zero()
