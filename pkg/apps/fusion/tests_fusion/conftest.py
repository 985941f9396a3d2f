import pytest
import torch

from apps.fusion.services import build_model, collate, crop_scene
from conftest import tiny_config


@pytest.fixture
def model(tiny_model_config):
    model = build_model(tiny_model_config, seed=3)
    model.eval()
    return model


@pytest.fixture
def double_model(tiny_model_config):
    model = build_model(tiny_model_config, seed=3).double()
    model.eval()
    return model


@pytest.fixture
def fitted_scenes(small_scenes, tiny_model_config):
    """Синтетика, обрезанная под ёмкость маленькой модели."""
    cfg = tiny_model_config
    return [crop_scene(s, cfg.max_trips, cfg.max_elements) for s in small_scenes]


@pytest.fixture
def small_batch(fitted_scenes, tiny_model_config):
    return collate(fitted_scenes[:2], tiny_model_config)


@pytest.fixture
def make_config():
    return tiny_config


@pytest.fixture
def random_tokens():
    def factory(batch, n_tokens, d_model, n_valid, seed=0):
        gen = torch.Generator().manual_seed(seed)
        features = torch.randn(batch, n_tokens, d_model, generator=gen, dtype=torch.float64)
        mask = torch.zeros(batch, n_tokens, dtype=torch.bool)
        mask[:, :n_valid] = True
        return features * mask.unsqueeze(-1), mask
    return factory
