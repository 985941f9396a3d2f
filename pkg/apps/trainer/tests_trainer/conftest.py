import pytest

from apps.losses.models import LossWeights
from apps.trainer.models import TrainConfig
from apps.trainer.tasks import train


@pytest.fixture
def weights():
    return LossWeights()


@pytest.fixture
def train_config():
    def factory(**overrides):
        values = dict(learning_rate=1e-3, batch_size=2, total_steps=4, log_every=0, seed=7)
        values.update(overrides)
        return TrainConfig(**values)
    return factory


@pytest.fixture
def run_training(small_scenes, tiny_model_config, weights, train_config, tmp_path):
    """train() на маленьких сценах; каждый вызов — своя папка."""
    counter = iter(range(100))

    def runner(out_name=None, scenes=None, **overrides):
        out_dir = tmp_path / (out_name or f"run-{next(counter)}")
        return train(scenes or small_scenes, tiny_model_config, weights, train_config(**overrides), out_dir)
    return runner
