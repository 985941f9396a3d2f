import copy

import pytest
import yaml
from click.testing import CliRunner

from crowdmap.cli import cli

TINY_RUN_CONFIG = {
    "version": 1,
    "scene": {"lanes": [2, 2]},
    "noise": {"severity_preset": "normal"},
    "model": {
        "d_model": 16, "n_heads": 2, "n_encoder_layers": 1, "n_decoder_layers": 2,
        "n_instance_queries": 8, "n_point_queries": 4, "max_trips": 3, "max_elements": 8,
        "points_per_element": 4, "seg_height": 6, "seg_width": 6, "ffn_dim": 24, "n_frequencies": 3,
    },
    "train": {"learning_rate": 1e-3, "batch_size": 2, "total_steps": 2, "log_every": 0},
    "dataset": {"scene_count": 4, "trips_per_scene": 2, "val_fraction": 0.5},
}


@pytest.fixture
def tiny_document():
    return copy.deepcopy(TINY_RUN_CONFIG)


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def write_config(tmp_path):
    def factory(document=None, name="run.yaml"):
        path = tmp_path / name
        path.write_text(yaml.safe_dump(TINY_RUN_CONFIG if document is None else document), encoding="utf-8")
        return path
    return factory


@pytest.fixture
def invoke(runner):
    """manage.py <args>; исключения не глотаем, чтобы видеть трейсбек в падающем тесте."""
    def factory(*args):
        return runner.invoke(cli, [str(a) for a in args], catch_exceptions=False)
    return factory
