from dataclasses import replace

import pytest

from apps.cli_io.run_config import DatasetConfig, RunConfig
from apps.fusion.models import ModelConfig
from apps.synth.models import SceneConfig
from apps.trainer.models import TrainConfig


@pytest.fixture
def tiny_run_config(tiny_model_config):
    """Одна-две итерации обучения на четырёх сценах: проверка проводки, не качества."""
    return RunConfig(
        scene=SceneConfig(lanes=(2, 2)),
        model=replace(tiny_model_config),
        train=TrainConfig(learning_rate=1e-3, batch_size=2, total_steps=1, log_every=0),
        dataset=DatasetConfig(scene_count=4, trips_per_scene=3, val_fraction=0.5),
    )


@pytest.fixture
def trend_run_config(tiny_run_config):
    """Настольный масштаб для трендов: модель desk, 48 сцен, 1500 шагов."""
    return replace(
        tiny_run_config,
        scene=SceneConfig(),
        model=ModelConfig.desk(max_trips=10),
        train=TrainConfig(learning_rate=5e-4, batch_size=4, total_steps=1500, log_every=0),
        dataset=replace(tiny_run_config.dataset, scene_count=48, val_fraction=0.25),
    )
