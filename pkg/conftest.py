# conftest.py — в корне проекта: общие фикстуры для всех приложений
import numpy as np
import pytest
import torch

from apps.fusion.models import ModelConfig
from apps.geometry.models import ElementCategory, MapElement, NormalizationFrame, PerceivedTrip, Scene
from apps.synth.models import NoiseConfig, SceneConfig
from apps.synth.tasks import build_records


def tiny_config(**overrides) -> ModelConfig:
    values = dict(
        d_model=16, n_heads=2, n_encoder_layers=1, n_decoder_layers=2,
        n_instance_queries=8, n_point_queries=4, max_trips=3, max_elements=6,
        points_per_element=4, seg_height=6, seg_width=6, ffn_dim=24, n_frequencies=3,
    )
    values.update(overrides)
    return ModelConfig(**values)


@pytest.fixture
def tiny_model_config():
    return tiny_config()


@pytest.fixture
def hand_scene():
    """Сцена 60×60: две линии + переход, два проезда."""
    lane = MapElement(ElementCategory.LANE_DIVIDER, [(10, 5), (10, 55)])
    stop = MapElement(ElementCategory.STOP_LINE, [(8, 40), (20, 40)])
    cross = MapElement(ElementCategory.CROSSWALK, [(8, 42), (20, 42), (20, 45), (8, 45)], closed=True)
    trips = [
        PerceivedTrip(0, [lane.with_points(lane.points + 0.2), stop]),
        PerceivedTrip(1, [lane, cross.with_points(cross.points - 0.1)]),
    ]
    scene = Scene("hand-0", NormalizationFrame.square(60.0), [lane, stop, cross], trips)
    scene.clean()
    return scene


@pytest.fixture
def small_scenes():
    """4 синтетические сцены по 3 проезда, лёгкий шум."""
    return build_records(4, SceneConfig(lanes=(2, 3), seed=11), NoiseConfig.from_preset("normal"),
                         trips_per_scene=3, seed=11)


@pytest.fixture
def zero_noise_scenes():
    return build_records(4, SceneConfig(lanes=(2, 3), seed=5), NoiseConfig.zero(), trips_per_scene=2, seed=5)


@pytest.fixture(autouse=True)
def _seeded():
    torch.manual_seed(0)
    np.random.seed(0)
    yield
